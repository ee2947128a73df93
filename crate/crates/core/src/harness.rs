//! Experiment drivers: evaluate both sides of an inequality on sampled
//! ensembles and summarize the ratios `lhs / rhs`.
//!
//! Equivalence constants are only reported. The only hard assertions are
//! the explicit-constant bounds (factor 2 of the Rademacher comparison,
//! `c_1 = 1`, and the contraction of `L`), each checked as
//! `lhs <= bound * rhs + HARD_SLACK`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::independence::{sample_ensemble, Ensemble, EnsembleKind, EnsembleSpec, Law, TensorFamily};
use crate::majorization::hl_submajorize;
use crate::operators::{op_l, square_function_mu, OperatorMatrix};
use crate::rearrangement::{singular_value_function, StepFunction};
use crate::spaces::{fmt_num, phi_moment, NormSpec, OrliczFunction};

pub const HARD_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upper,
    Lower,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModularVariant {
    Positive,
    MeanZero,
    Khinchine,
}

impl ModularVariant {
    pub const ALL: [ModularVariant; 3] = [ModularVariant::Positive, ModularVariant::MeanZero, ModularVariant::Khinchine];
}

/// One inequality to evaluate on a family.
#[derive(Clone, Debug)]
pub enum Experiment {
    /// `||sum x_k||_p` vs `(sum ||x_k||_p^p)^{1/p} + (sum ||x_k||_2^2)^{1/2}`
    Rosenthal { p: f64 },
    /// `||sum x_k||_E` vs `||sum x_k (x) e_k||_{Z_E^2}` for mean-zero families.
    Js { spec: NormSpec, direction: Direction },
    /// `||sum x_k||_E` vs `||sum x_k (x) e_k||_{Z_E^1}` for positive families.
    JsPositive { spec: NormSpec, direction: Direction },
    /// `||sum x_k||_E` vs `||(sum x_k^2)^{1/2}||_E`
    Khinchine { spec: NormSpec },
    /// `||(sum |x_k|^2)^{1/2}||_E` vs `||(sum |x_k^*|^2)^{1/2}||_E`; needs no family structure.
    KhinchineAdjoint { spec: NormSpec },
    /// `tau(Phi(|sum x_k|))` vs the variant's right-hand side.
    Modular { phi: OrliczFunction, variant: ModularVariant },
    /// `||sum x_k||_q` vs `||sum x_k (x) r_k||_q`, asserted with constant 2.
    Rademacher { q: f64 },
    /// `||sum x_k||_{2^N}` vs `||sum x_k (x) e_k||_{L_{2^N} cap L_2}`; asserted with constant 1 for `N = 1`.
    CapLemma { n: u32 },
    /// `||L z||_q` vs `||z||_q` for `z` with columns `(x_k)` and `(x_{k+1})`,
    /// asserted with constant 1 together with `|Lz|^2 <<< |z|^2`.
    LContraction { q: f64 },
}

/// Paired values for one trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub lhs: f64,
    pub rhs: f64,
    /// `Some(false)` when a hard assertion failed on this trial.
    pub hard_ok: Option<bool>,
}

fn lp(p: f64, mu: &StepFunction) -> Result<f64> {
    NormSpec::Lp(p).norm(mu)
}

fn strictly_inside(spec: &NormSpec) -> bool {
    let (lo, hi) = spec.exponent_range();
    lo > 1.0 && hi.is_finite()
}

impl Experiment {
    pub fn theorem_id(&self) -> String {
        let dir = |d: &Direction| match d {
            Direction::Upper => "-upper",
            Direction::Lower => "-lower",
            Direction::Both => "",
        };
        match self {
            Experiment::Rosenthal { .. } => "rosenthal".into(),
            Experiment::Js { direction, .. } => format!("js{}", dir(direction)),
            Experiment::JsPositive { direction, .. } => format!("js-positive{}", dir(direction)),
            Experiment::Khinchine { .. } => "khinchine".into(),
            Experiment::KhinchineAdjoint { .. } => "khinchine-adjoint".into(),
            Experiment::Modular { variant, .. } => match variant {
                ModularVariant::Positive => "modular-positive".into(),
                ModularVariant::MeanZero => "modular-mean-zero".into(),
                ModularVariant::Khinchine => "modular-khinchine".into(),
            },
            Experiment::Rademacher { .. } => "lemma-rademacher".into(),
            Experiment::CapLemma { .. } => "lemma-cap".into(),
            Experiment::LContraction { .. } => "lemma-l-contraction".into(),
        }
    }

    pub fn spec_label(&self) -> String {
        match self {
            Experiment::Rosenthal { p } => format!("Lp({})", fmt_num(*p)),
            Experiment::Js { spec, .. } => format!("ZE2({spec})"),
            Experiment::JsPositive { spec, .. } => format!("ZE1({spec})"),
            Experiment::Khinchine { spec } | Experiment::KhinchineAdjoint { spec } => spec.to_string(),
            Experiment::Modular { phi, .. } => phi.label().to_string(),
            Experiment::Rademacher { q } | Experiment::LContraction { q } => format!("Lp({})", fmt_num(*q)),
            Experiment::CapLemma { n } => format!("cap(2,{})", 1u64 << n),
        }
    }

    /// Law the family must follow for the inequality's hypothesis.
    pub fn required_law(&self) -> Option<Law> {
        match self {
            Experiment::JsPositive { .. } | Experiment::Modular { variant: ModularVariant::Positive, .. } => {
                Some(Law::Positive)
            }
            Experiment::KhinchineAdjoint { .. } => None,
            _ => Some(Law::MeanZero),
        }
    }

    pub fn needs_family(&self) -> bool {
        !matches!(self, Experiment::KhinchineAdjoint { .. })
    }

    pub fn hard_bound(&self) -> Option<f64> {
        match self {
            Experiment::Rademacher { .. } => Some(2.0),
            Experiment::CapLemma { n: 1 } => Some(1.0),
            Experiment::LContraction { .. } => Some(1.0),
            _ => None,
        }
    }

    /// Labels of approximations the right-hand side depends on.
    pub fn surrogate_flags(&self) -> Vec<String> {
        let holmstedt = match self {
            Experiment::Js { .. } => true,
            Experiment::Modular { variant: ModularVariant::MeanZero, .. } => true,
            Experiment::JsPositive { spec, .. } | Experiment::Khinchine { spec } | Experiment::KhinchineAdjoint { spec } => {
                spec.uses_surrogate()
            }
            _ => false,
        };
        if holmstedt {
            vec!["holmstedt_l1_plus_lp".to_string()]
        } else {
            vec![]
        }
    }

    /// Checks the exponent hypotheses of the underlying statement.
    pub fn check_hypothesis(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Hypothesis(msg));
        match self {
            Experiment::Rosenthal { p } if !(*p >= 2.0 && p.is_finite()) => fail(format!("Rosenthal needs 2 <= p < inf, got {p}")),
            Experiment::Js { spec, direction } => {
                let (lo, hi) = spec.exponent_range();
                let upper_ok = hi.is_finite();
                let lower_ok = lo > 1.0;
                let ok = match direction {
                    Direction::Upper => upper_ok,
                    Direction::Lower => lower_ok,
                    Direction::Both => upper_ok && lower_ok,
                };
                if ok {
                    Ok(())
                } else {
                    fail(format!("{spec} is outside the admissible exponent range"))
                }
            }
            Experiment::JsPositive { spec, direction } => {
                let (_, hi) = spec.exponent_range();
                if *direction != Direction::Lower && !hi.is_finite() {
                    fail(format!("{spec} needs a finite upper exponent"))
                } else {
                    Ok(())
                }
            }
            Experiment::Khinchine { spec } | Experiment::KhinchineAdjoint { spec } if !strictly_inside(spec) => {
                fail(format!("{spec} needs exponents strictly inside (1, inf)"))
            }
            Experiment::Modular { phi, .. } if !(phi.p_convex() > 1.0 && phi.q_concave().is_finite()) => {
                fail(format!("{} needs 1 < p_convex <= q_concave < inf", phi.label()))
            }
            Experiment::Rademacher { q } | Experiment::LContraction { q } if *q < 1.0 => fail(format!("q = {q} is below 1")),
            Experiment::LContraction { q } if *q < 2.0 => fail(format!("L is a contraction only for q >= 2, got {q}")),
            Experiment::CapLemma { n } if *n == 0 || *n > 10 => fail(format!("N = {n} is outside 1..=10")),
            _ => Ok(()),
        }
    }

    /// Evaluates both sides on a sampled ensemble.
    pub fn evaluate(&self, ensemble: &Ensemble) -> Result<TrialOutcome> {
        if let Experiment::KhinchineAdjoint { spec } = self {
            let xs = ensemble.elements();
            let lhs = spec.norm(&square_function_mu(xs, false)?)?;
            let rhs = spec.norm(&square_function_mu(xs, true)?)?;
            return Ok(TrialOutcome { lhs, rhs, hard_ok: None });
        }
        let family = ensemble
            .family()
            .ok_or_else(|| Error::Hypothesis(format!("{} needs an independent family", self.theorem_id())))?;
        self.evaluate_family(family)
    }

    pub fn evaluate_family(&self, family: &TensorFamily) -> Result<TrialOutcome> {
        let plain = |lhs, rhs| Ok(TrialOutcome { lhs, rhs, hard_ok: None });
        let bounded = |lhs: f64, rhs: f64, bound: f64, extra: bool| {
            Ok(TrialOutcome { lhs, rhs, hard_ok: Some(extra && lhs <= bound * rhs + HARD_SLACK) })
        };
        match self {
            Experiment::KhinchineAdjoint { .. } => self.evaluate(&Ensemble::Family(family.clone())),
            Experiment::Rosenthal { p } => {
                let lhs = lp(*p, &sum_mu(family)?)?;
                let mut pth = 0.0;
                let mut second = 0.0;
                for k in 0..family.len() {
                    let mu = family.factor_mu(k)?;
                    pth += mu.integrate_power(*p, 0.0, f64::INFINITY)?;
                    second += mu.integrate_power(2.0, 0.0, f64::INFINITY)?;
                }
                plain(lhs, pth.powf(1.0 / p) + second.sqrt())
            }
            Experiment::Js { spec, .. } => {
                let lhs = spec.norm(&sum_mu(family)?)?;
                plain(lhs, NormSpec::ze(spec.clone(), 2.0).norm(&family.direct_sum_mu()?)?)
            }
            Experiment::JsPositive { spec, .. } => {
                let lhs = spec.norm(&sum_mu(family)?)?;
                plain(lhs, NormSpec::ze(spec.clone(), 1.0).norm(&family.direct_sum_mu()?)?)
            }
            Experiment::Khinchine { spec } => {
                let lhs = spec.norm(&sum_mu(family)?)?;
                plain(lhs, spec.norm(&square_function_mu(family.embedded(), false)?)?)
            }
            Experiment::Modular { phi, variant } => {
                let lhs = phi_moment(phi, &sum_mu(family)?);
                let rhs = match variant {
                    ModularVariant::Positive | ModularVariant::MeanZero => {
                        let x = family.direct_sum_mu()?;
                        let head = phi_moment(phi, &x.restrict(0.0, 1.0)?);
                        let tail = if *variant == ModularVariant::Positive {
                            x.total_integral()
                        } else {
                            NormSpec::Sum(1.0, 2.0).norm(&x)?
                        };
                        head + phi.evaluate(tail)
                    }
                    ModularVariant::Khinchine => phi_moment(phi, &square_function_mu(family.embedded(), false)?),
                };
                plain(lhs, rhs)
            }
            Experiment::Rademacher { q } => {
                let lhs = lp(*q, &sum_mu(family)?)?;
                let rhs = lp(*q, &family.rademacher_expand()?.mu()?)?;
                bounded(lhs, rhs, 2.0, true)
            }
            Experiment::CapLemma { n } => {
                let q = (1u64 << n) as f64;
                let lhs = lp(q, &sum_mu(family)?)?;
                let rhs = NormSpec::Cap(2.0, q).norm(&family.direct_sum_mu()?)?;
                if *n == 1 {
                    bounded(lhs, rhs, 1.0, true)
                } else {
                    plain(lhs, rhs)
                }
            }
            Experiment::LContraction { q } => {
                let z = contraction_input(family)?;
                let lz = op_l(&z)?.mu()?;
                let zmu = z.mu()?;
                let majorized = hl_submajorize(&lz.powf(2.0), &zmu.powf(2.0));
                bounded(lp(*q, &lz)?, lp(*q, &zmu)?, 1.0, majorized)
            }
        }
    }
}

/// `mu(sum_k x_k)` in the ambient algebra.
pub fn sum_mu(family: &TensorFamily) -> Result<StepFunction> {
    singular_value_function(&family.sum()?)
}

/// Two-column input `z_{k,0} = x_k`, `z_{k,1} = x_{k+1 mod K}` for the
/// contraction check.
pub fn contraction_input(family: &TensorFamily) -> Result<OperatorMatrix> {
    let xs = family.embedded();
    let count = xs.len();
    OperatorMatrix::new((0..count).map(|k| vec![xs[k].clone(), xs[(k + 1) % count].clone()]).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDescriptor {
    pub kind: String,
    #[serde(rename = "K")]
    pub count: usize,
    pub n: usize,
    pub law: Option<Law>,
    pub seed: u64,
    pub trials: usize,
}

/// Summary of one `(theorem, spec, ensemble, seed)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub theorem_id: String,
    pub spec: String,
    pub ensemble: EnsembleDescriptor,
    pub trials: usize,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `None` when every trial was excluded.
    pub ratio_min: Option<f64>,
    pub ratio_max: Option<f64>,
    pub ratio_geomean: Option<f64>,
    /// Trials whose ratio is undefined (`rhs = 0`).
    pub excluded: Vec<usize>,
    pub hard_bound: Option<f64>,
    /// Trials that failed a hard assertion.
    pub violations: Vec<usize>,
    pub surrogate_flags: Vec<String>,
}

impl RatioReport {
    pub fn from_outcomes(
        experiment: &Experiment,
        ensemble: EnsembleDescriptor,
        outcomes: &[TrialOutcome],
        exploratory: bool,
    ) -> Self {
        let lhs: Vec<f64> = outcomes.iter().map(|o| o.lhs).collect();
        let rhs: Vec<f64> = outcomes.iter().map(|o| o.rhs).collect();
        let mut excluded = Vec::new();
        let mut ratios = Vec::new();
        for (i, o) in outcomes.iter().enumerate() {
            let r = o.lhs / o.rhs;
            if o.rhs > 0.0 && r.is_finite() && r > 0.0 {
                ratios.push(r);
            } else if o.lhs == 0.0 && o.rhs == 0.0 || o.rhs <= 0.0 || !r.is_finite() {
                excluded.push(i);
            } else {
                // lhs = 0 < rhs: a zero ratio has no logarithm
                excluded.push(i);
            }
        }
        ratios.sort_by(f64::total_cmp);
        let (ratio_min, ratio_max, ratio_geomean) = if ratios.is_empty() {
            (None, None, None)
        } else {
            let mean_log = ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64;
            (Some(ratios[0]), Some(ratios[ratios.len() - 1]), Some(mean_log.exp().clamp(ratios[0], ratios[ratios.len() - 1])))
        };
        let violations = outcomes.iter().enumerate().filter(|(_, o)| o.hard_ok == Some(false)).map(|(i, _)| i).collect();
        let mut theorem_id = experiment.theorem_id();
        let mut surrogate_flags = experiment.surrogate_flags();
        if exploratory {
            theorem_id.push_str("/exploratory");
            surrogate_flags.push("exploratory".into());
        }
        RatioReport {
            theorem_id,
            spec: experiment.spec_label(),
            trials: outcomes.len(),
            ensemble,
            lhs,
            rhs,
            ratio_min,
            ratio_max,
            ratio_geomean,
            excluded,
            hard_bound: experiment.hard_bound(),
            violations,
            surrogate_flags,
        }
    }

    pub fn passed_hard_checks(&self) -> bool {
        self.violations.is_empty()
    }

    /// `ratio_max / ratio_min`, `None` when undefined.
    pub fn spread(&self) -> Option<f64> {
        Some(self.ratio_max? / self.ratio_min?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    theorem_id: &'a str,
    spec: &'a str,
    kind: &'a str,
    #[serde(rename = "K")]
    count: usize,
    n: usize,
    seed: u64,
    trial: usize,
    lhs: f64,
    rhs: f64,
    /// Empty for excluded trials.
    ratio: Option<f64>,
}

/// One CSV row per `(report, trial)` under the header
/// `theorem_id,spec,kind,K,n,seed,trial,lhs,rhs,ratio`.
pub fn write_csv<W: std::io::Write>(reports: &[RatioReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if reports.is_empty() {
        w.write_record(["theorem_id", "spec", "kind", "K", "n", "seed", "trial", "lhs", "rhs", "ratio"])
            .map_err(csv_error)?;
    }
    for r in reports {
        for (trial, (&lhs, &rhs)) in r.lhs.iter().zip(&r.rhs).enumerate() {
            let ratio = (!r.excluded.contains(&trial)).then(|| lhs / rhs);
            w.serialize(CsvRow {
                theorem_id: &r.theorem_id,
                spec: &r.spec,
                kind: &r.ensemble.kind,
                count: r.ensemble.count,
                n: r.ensemble.n,
                seed: r.ensemble.seed,
                trial,
                lhs,
                rhs,
                ratio,
            })
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

fn resolve_law(experiment: &Experiment, ensemble: &EnsembleSpec) -> Result<EnsembleSpec> {
    let mut spec = ensemble.clone();
    match (experiment.required_law(), ensemble.law) {
        (Some(need), Some(have)) if need != have => {
            return Err(Error::Hypothesis(format!(
                "{} needs a {need:?} family but the ensemble is {have:?}",
                experiment.theorem_id()
            )))
        }
        (Some(need), None) => spec.law = Some(need),
        (None, None) => spec.law = Some(Law::Raw),
        _ => {}
    }
    if experiment.needs_family() && spec.kind == EnsembleKind::RankOne {
        return Err(Error::Hypothesis(format!("{} needs an independent family; rank_one is not one", experiment.theorem_id())));
    }
    Ok(spec)
}

/// Runs `trials` independent trials of one experiment. Trial `i` draws its
/// ensemble from the stream keyed by `(kind, K, n, seed, i)`, so the report
/// does not depend on the execution mode.
pub fn run_cell(
    experiment: &Experiment,
    ensemble: &EnsembleSpec,
    trials: usize,
    seed: u64,
    exec: Execution,
    exploratory: bool,
) -> Result<RatioReport> {
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    if !exploratory {
        experiment.check_hypothesis()?;
    }
    let spec = resolve_law(experiment, ensemble)?;
    let results = exec.map_indexed(trials, |i| {
        let ens = sample_ensemble(&spec, seed, i as u64)?;
        experiment.evaluate(&ens)
    });
    let outcomes = results.into_iter().collect::<Result<Vec<_>>>()?;
    let descriptor = EnsembleDescriptor {
        kind: spec.kind.name().to_string(),
        count: spec.count,
        n: spec.n,
        law: spec.law,
        seed,
        trials,
    };
    Ok(RatioReport::from_outcomes(experiment, descriptor, &outcomes, exploratory))
}

fn single_family_report(experiment: &Experiment, family: &TensorFamily) -> Result<RatioReport> {
    experiment.check_hypothesis()?;
    let outcome = experiment.evaluate_family(family)?;
    let descriptor = EnsembleDescriptor {
        kind: "custom".into(),
        count: family.len(),
        n: family.factor_dims().iter().copied().max().unwrap_or(0),
        law: None,
        seed: 0,
        trials: 1,
    };
    Ok(RatioReport::from_outcomes(experiment, descriptor, &[outcome], false))
}

fn require_mean_zero(family: &TensorFamily) -> Result<()> {
    for (k, x) in family.factors().iter().enumerate() {
        let scale = 1.0 + x.l2_norm_sqr().sqrt();
        if x.trace().norm() > 1e-10 * scale {
            return Err(Error::Hypothesis(format!("factor {k} is not mean zero")));
        }
    }
    Ok(())
}

fn require_positive(family: &TensorFamily) -> Result<()> {
    for (k, x) in family.factors().iter().enumerate() {
        let scale = 1.0 + x.operator_norm()?;
        if x.eigenvalues()?.into_iter().flatten().any(|l| l < -1e-10 * scale) {
            return Err(Error::Hypothesis(format!("factor {k} is not positive")));
        }
    }
    Ok(())
}

pub fn verify_rosenthal(family: &TensorFamily, p: f64) -> Result<RatioReport> {
    require_mean_zero(family)?;
    single_family_report(&Experiment::Rosenthal { p }, family)
}

/// Mean-zero families are compared against `Z_E^2`; with `positive` the
/// family must be positive and is compared against `Z_E^1`.
pub fn verify_js(family: &TensorFamily, spec: &NormSpec, direction: Direction, positive: bool) -> Result<RatioReport> {
    if positive {
        require_positive(family)?;
        single_family_report(&Experiment::JsPositive { spec: spec.clone(), direction }, family)
    } else {
        require_mean_zero(family)?;
        single_family_report(&Experiment::Js { spec: spec.clone(), direction }, family)
    }
}

pub fn verify_khinchine(family: &TensorFamily, spec: &NormSpec) -> Result<RatioReport> {
    require_mean_zero(family)?;
    single_family_report(&Experiment::Khinchine { spec: spec.clone() }, family)
}

pub fn verify_modular(family: &TensorFamily, phi: &OrliczFunction, variant: ModularVariant) -> Result<RatioReport> {
    match variant {
        ModularVariant::Positive => require_positive(family)?,
        _ => require_mean_zero(family)?,
    }
    single_family_report(&Experiment::Modular { phi: phi.clone(), variant }, family)
}

/// Rademacher comparison for each `q`, the `L_{2^N} cap L_2` comparison for
/// `N = 1, 2, 3`, and the contraction of `L` for each `q >= 2`.
pub fn verify_lemma_bounds(family: &TensorFamily, q_list: &[f64]) -> Result<Vec<RatioReport>> {
    require_mean_zero(family)?;
    let mut out = Vec::new();
    for &q in q_list {
        out.push(single_family_report(&Experiment::Rademacher { q }, family)?);
    }
    for n in 1..=3 {
        out.push(single_family_report(&Experiment::CapLemma { n }, family)?);
    }
    for &q in q_list.iter().filter(|&&q| q >= 2.0) {
        out.push(single_family_report(&Experiment::LContraction { q }, family)?);
    }
    Ok(out)
}

/// `max / min` of the per-seed geometric means, `None` if any is undefined.
pub fn geomean_spread(reports: &[RatioReport]) -> Option<f64> {
    let g: Vec<f64> = reports.iter().map(|r| r.ratio_geomean).collect::<Option<_>>()?;
    let max = g.iter().copied().fold(f64::MIN, f64::max);
    let min = g.iter().copied().fold(f64::MAX, f64::min);
    Some(max / min)
}
