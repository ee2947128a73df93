//! Exact-identity suites. Unlike the harness these have no unknown
//! constants: every trial either meets its tolerance or is a failure.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::algebra::AlgElement;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::independence::{random_ambient_element, sample_ensemble, EnsembleKind, EnsembleSpec, Law, TensorFamily};
use crate::operators::{op_s, op_s_star, op_t, op_t_star, square_function_mu, Column};
use crate::rearrangement::{singular_value_function, StepFunction};
use crate::rng::{label_hash, Stream};
use crate::spaces::NormSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleCheck {
    L2Orthogonality,
    RankOne,
    Duality,
    Mu,
}

impl OracleCheck {
    pub fn name(self) -> &'static str {
        match self {
            OracleCheck::L2Orthogonality => "l2-orthogonality",
            OracleCheck::RankOne => "rank-one",
            OracleCheck::Duality => "duality",
            OracleCheck::Mu => "mu",
        }
    }
}

impl fmt::Display for OracleCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleCheck {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "l2-orthogonality" => Ok(OracleCheck::L2Orthogonality),
            "rank-one" => Ok(OracleCheck::RankOne),
            "duality" => Ok(OracleCheck::Duality),
            "mu" => Ok(OracleCheck::Mu),
            other => Err(Error::Config(format!("unknown oracle check '{other}'"))),
        }
    }
}

/// Outcome of one oracle suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub check: String,
    pub trials: usize,
    /// Largest defect relative to the per-trial tolerance scale.
    pub max_relative_defect: f64,
    pub tolerance: f64,
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<StepFunction>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn collect(check: OracleCheck, tolerance: f64, defects: Vec<Result<(f64, String)>>) -> Result<Self> {
        let mut max = 0.0f64;
        let mut failures = Vec::new();
        let trials = defects.len();
        for d in defects {
            let (rel, label) = d?;
            max = max.max(rel);
            if rel.is_nan() || rel > tolerance {
                failures.push(format!("{label}: relative defect {rel:.3e} exceeds {tolerance:.0e}"));
            }
        }
        Ok(OracleReport { check: check.name().into(), trials, max_relative_defect: max, tolerance, failures, mu: None })
    }
}

pub const L2_TOLERANCE: f64 = 1e-9;
pub const RANK_ONE_TOLERANCE: f64 = 1e-10;
pub const DUALITY_TOLERANCE: f64 = 1e-8;

const SMALL_KINDS: [EnsembleKind; 3] = [EnsembleKind::Classical, EnsembleKind::GueLike, EnsembleKind::Fermionic];

/// Random `(kind, K, n)` with `K <= 6`, `n <= 4` and a dense ambient of at
/// most `max_dim` rows.
pub fn random_small_spec(rng: &mut Stream, kinds: &[EnsembleKind], max_dim: usize) -> EnsembleSpec {
    let kind = kinds[rng.below(kinds.len() as u64) as usize];
    let n = if kind == EnsembleKind::Fermionic { 2 } else { 2 + rng.below(3) as usize };
    let mut max_k = 1;
    while max_k < 6 && n.pow(max_k as u32 + 1) <= max_dim {
        max_k += 1;
    }
    let count = 1 + rng.below(max_k as u64) as usize;
    EnsembleSpec::new(kind, count, n).with_law(Law::MeanZero)
}

fn trial_stream(check: OracleCheck, seed: u64, trial: usize) -> Stream {
    Stream::from_parts(&[label_hash(check.name()), seed, trial as u64])
}

fn small_family(check: OracleCheck, seed: u64, trial: usize, max_dim: usize) -> Result<(TensorFamily, Stream, String)> {
    let mut rng = trial_stream(check, seed, trial);
    let spec = random_small_spec(&mut rng, &SMALL_KINDS, max_dim);
    let ens = sample_ensemble(&spec, seed, trial as u64)?;
    let family = ens.family().cloned().ok_or_else(|| Error::Hypothesis("expected a family".into()))?;
    Ok((family, rng, format!("trial {trial} ({spec})")))
}

/// `||sum x_k||_2^2 = sum ||x_k||_2^2` for mean-zero families, from traces only.
pub fn l2_orthogonality(trials: usize, seed: u64, exec: Execution) -> Result<OracleReport> {
    let defects = exec.map_indexed(trials, |i| {
        let (family, _, label) = small_family(OracleCheck::L2Orthogonality, seed, i, 256)?;
        let lhs = family.sum()?.l2_norm_sqr();
        let rhs: f64 = family.factors().iter().map(AlgElement::l2_norm_sqr).sum();
        let rel = if rhs > 0.0 { (lhs - rhs).abs() / rhs } else { lhs };
        Ok((rel, label))
    });
    OracleReport::collect(OracleCheck::L2Orthogonality, L2_TOLERANCE, defects)
}

/// Rank-one column `x_k = e_{k,0}` in `M_n`: the column square function has
/// `L_p` norm `n^{1/2 - 1/p}`, the row square function has norm 1.
pub fn rank_one(ns: &[usize], ps: &[f64]) -> Result<OracleReport> {
    let mut defects = Vec::new();
    for &n in ns {
        let spec = EnsembleSpec::new(EnsembleKind::RankOne, n, n);
        let ens = sample_ensemble(&spec, 0, 0)?;
        let col = square_function_mu(ens.elements(), false)?;
        let row = square_function_mu(ens.elements(), true)?;
        for &p in ps {
            let want = (n as f64).powf(0.5 - 1.0 / p);
            let a = NormSpec::Lp(p).norm(&col)?;
            let b = NormSpec::Lp(p).norm(&row)?;
            let rel = (a - want).abs().max((b - 1.0).abs());
            defects.push(Ok((rel, format!("n={n} p={p}"))));
        }
    }
    OracleReport::collect(OracleCheck::RankOne, RANK_ONE_TOLERANCE, defects)
}

/// `tau(T(z) w) = (tau (x) Sigma)(z T*(w))` and
/// `sum_k tau(S(z)_k w_k) = tau(z S*(w))` on random non-Hermitian inputs.
pub fn duality(trials: usize, seed: u64, exec: Execution) -> Result<OracleReport> {
    let defects = exec.map_indexed(trials, |i| {
        let (family, mut rng, label) = small_family(OracleCheck::Duality, seed, i, 64)?;
        let count = family.len();
        let draw = |rng: &mut Stream| (0..count).map(|_| random_ambient_element(&family, false, rng)).collect::<Result<Vec<_>>>();
        let z = crate::independence::DirectSumElement::new(draw(&mut rng)?)?;
        let w = random_ambient_element(&family, false, &mut rng)?;
        let lhs_t = op_t(&family, &z)?.trace_product(&w)?;
        let rhs_t = z.trace_pairing(&op_t_star(&family, &w)?)?;
        let rel_t = (lhs_t - rhs_t).norm() / (1.0 + lhs_t.norm());

        let y = random_ambient_element(&family, false, &mut rng)?;
        let row = draw(&mut rng)?;
        let lhs_s = op_s(&family, &y)?.pairing(&row)?;
        let rhs_s = y.trace_product(&op_s_star(&family, &Column::new(row)?)?)?;
        let rel_s = (lhs_s - rhs_s).norm() / (1.0 + lhs_s.norm());
        Ok((rel_t.max(rel_s), label))
    });
    OracleReport::collect(OracleCheck::Duality, DUALITY_TOLERANCE, defects)
}

/// `mu(x) = mu(x^*)` for one user-supplied element; the report carries `mu(x)`.
pub fn mu_check(x: &AlgElement) -> Result<OracleReport> {
    let mu = singular_value_function(x)?;
    let star = singular_value_function(&x.adjoint())?;
    let rel = mu.sup_distance(&star) / (1.0 + mu.top());
    let mut report = OracleReport::collect(OracleCheck::Mu, 1e-10, vec![Ok((rel, "adjoint".into()))])?;
    report.mu = Some(mu);
    Ok(report)
}
