//! Independent families built from tensor products and from Jordan-Wigner
//! fermions, their conditional expectations, and random ensembles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::algebra::{pauli, AlgElement, TracialAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C0};
use crate::rearrangement::{mu_of_direct_sum, singular_value_function, StepFunction};
use crate::rng::{label_hash, Stream};

pub const MAX_FACTORS: usize = 8;
pub const MAX_AMBIENT_DIM: usize = 4096;
pub const MAX_RADEMACHER_FACTORS: usize = 12;
const INDEPENDENCE_TOLERANCE: f64 = 1e-10;

/// How factor elements sit inside the ambient algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Embedding {
    /// `x_k -> 1 (x) ... (x) x_k (x) ... (x) 1`, factor 0 most significant.
    Kronecker,
    /// `a + b sigma_x -> a + b c_k` with `c_k = sigma_z^{(x) k} (x) sigma_x (x) 1 ...`.
    JordanWigner,
}

#[derive(Clone, Debug)]
pub struct TensorFamily {
    factors: Vec<AlgElement>,
    dims: Vec<usize>,
    embedding: Embedding,
    ambient: Arc<TracialAlgebra>,
    embedded: Vec<AlgElement>,
    /// Jordan-Wigner generators `c_k`, only for the fermionic embedding.
    generators: Vec<CMatrix>,
}

fn factor_dim(x: &AlgElement) -> Result<usize> {
    let alg = x.algebra();
    if alg.blocks().len() != 1 || !alg.is_probability_space() {
        return Err(Error::InvalidAlgebra("factors must be single-block probability spaces".into()));
    }
    Ok(alg.blocks()[0].dim)
}

fn check_budget(count: usize, dim: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::Budget("a family needs at least one factor".into()));
    }
    if count > MAX_FACTORS {
        return Err(Error::Budget(format!("{count} factors exceed the limit of {MAX_FACTORS}")));
    }
    if dim > MAX_AMBIENT_DIM {
        return Err(Error::Budget(format!("ambient dimension {dim} exceeds {MAX_AMBIENT_DIM}")));
    }
    Ok(())
}

fn checked_product(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d).filter(|&p| p <= MAX_AMBIENT_DIM))
        .ok_or_else(|| Error::Budget(format!("ambient dimension of {dims:?} exceeds {MAX_AMBIENT_DIM}")))
}

/// `sigma_z^{(x) k} (x) sigma_x (x) 1^{(x) (count - k - 1)}`
pub fn jordan_wigner_generator(k: usize, count: usize) -> CMatrix {
    let mut m = CMatrix::identity(1);
    for j in 0..count {
        let f = match j.cmp(&k) {
            std::cmp::Ordering::Less => pauli::z(),
            std::cmp::Ordering::Equal => pauli::x(),
            std::cmp::Ordering::Greater => CMatrix::identity(2),
        };
        m = m.kron(&f);
    }
    m
}

impl TensorFamily {
    /// Embeds each factor into the tensor product of the factor algebras.
    pub fn build(factors: Vec<AlgElement>) -> Result<Self> {
        let dims = factors.iter().map(factor_dim).collect::<Result<Vec<_>>>()?;
        check_budget(factors.len(), 0)?;
        let total = checked_product(&dims)?;
        let ambient = TracialAlgebra::matrix(total)?.shared();
        let embedded = (0..factors.len())
            .map(|k| {
                let mut m = CMatrix::identity(1);
                for (j, &d) in dims.iter().enumerate() {
                    m = if j == k { m.kron(&factors[k].blocks()[0]) } else { m.kron(&CMatrix::identity(d)) };
                }
                AlgElement::from_matrix(ambient.clone(), m)
            })
            .collect::<Result<Vec<_>>>()?;
        let family = TensorFamily { factors, dims, embedding: Embedding::Kronecker, ambient, embedded, generators: vec![] };
        family.verify_independence()?;
        Ok(family)
    }

    /// Fermionic family: each factor must lie in `span{1, sigma_x}` of `M_2`
    /// and is mapped to `a + b c_k` for the Jordan-Wigner generator `c_k`.
    pub fn fermionic(factors: Vec<AlgElement>) -> Result<Self> {
        let count = factors.len();
        check_budget(count, 0)?;
        let total = checked_product(&vec![2; count])?;
        let ambient = TracialAlgebra::matrix(total)?.shared();
        let generators: Vec<CMatrix> = (0..count).map(|k| jordan_wigner_generator(k, count)).collect();
        let mut embedded = Vec::with_capacity(count);
        for (k, x) in factors.iter().enumerate() {
            if factor_dim(x)? != 2 {
                return Err(Error::InvalidAlgebra("fermionic factors live in M_2".into()));
            }
            let m = &x.blocks()[0];
            if (m[(0, 0)] - m[(1, 1)]).norm() > 1e-12 || (m[(0, 1)] - m[(1, 0)]).norm() > 1e-12 {
                return Err(Error::InvalidAlgebra("fermionic factor must be a + b sigma_x".into()));
            }
            let mut e = generators[k].scale(m[(0, 1)]);
            e.axpy(m[(0, 0)], &CMatrix::identity(total));
            embedded.push(AlgElement::from_matrix(ambient.clone(), e)?);
        }
        let family = TensorFamily {
            factors,
            dims: vec![2; count],
            embedding: Embedding::JordanWigner,
            ambient,
            embedded,
            generators,
        };
        family.verify_independence()?;
        Ok(family)
    }

    fn verify_independence(&self) -> Result<()> {
        let traces: Vec<Complex64> = self.factors.iter().map(AlgElement::trace).collect();
        let norms: Vec<f64> = self.factors.iter().map(|x| x.l2_norm_sqr().sqrt()).collect();
        for (k, e) in self.embedded.iter().enumerate() {
            let defect = (e.trace() - traces[k]).norm();
            if defect > INDEPENDENCE_TOLERANCE * (1.0 + norms[k]) {
                return Err(Error::IndependenceViolated(format!("trace of embedded[{k}] is off by {defect:.3e}")));
            }
        }
        for j in 0..self.embedded.len() {
            for k in j + 1..self.embedded.len() {
                let joint = self.embedded[j].trace_product(&self.embedded[k])?;
                let defect = (joint - traces[j] * traces[k]).norm();
                if defect > INDEPENDENCE_TOLERANCE * (1.0 + norms[j] * norms[k]) {
                    return Err(Error::IndependenceViolated(format!(
                        "tau(x_{j} x_{k}) differs from tau(x_{j}) tau(x_{k}) by {defect:.3e}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[AlgElement] {
        &self.factors
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn embedding(&self) -> Embedding {
        self.embedding
    }

    pub fn ambient(&self) -> &Arc<TracialAlgebra> {
        &self.ambient
    }

    pub fn embedded(&self) -> &[AlgElement] {
        &self.embedded
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient.blocks()[0].dim
    }

    /// `sum_k x_k` in the ambient algebra.
    pub fn sum(&self) -> Result<AlgElement> {
        AlgElement::sum(self.ambient.clone(), &self.embedded)
    }

    /// `sum_k x_k (x) e_k`
    pub fn direct_sum(&self) -> DirectSumElement {
        DirectSumElement { summands: self.embedded.clone(), atom_mass: 1.0 }
    }

    /// `mu(x_k)`, computed in the factor algebra (the embedding preserves
    /// the distribution).
    pub fn factor_mu(&self, k: usize) -> Result<StepFunction> {
        singular_value_function(&self.factors[k])
    }

    /// `mu(sum_k x_k (x) e_k)` from the factor distributions.
    pub fn direct_sum_mu(&self) -> Result<StepFunction> {
        let parts = (0..self.len()).map(|k| self.factor_mu(k)).collect::<Result<Vec<_>>>()?;
        Ok(mu_of_direct_sum(&parts))
    }

    /// Trace-preserving conditional expectation onto the k-th factor,
    /// returned inside the ambient algebra.
    pub fn conditional_expectation(&self, k: usize, y: &AlgElement) -> Result<AlgElement> {
        if k >= self.len() {
            return Err(Error::IndexOutOfRange { index: k, len: self.len() });
        }
        if y.algebra() != &self.ambient && **y.algebra() != *self.ambient {
            return Err(Error::AlgebraMismatch);
        }
        match self.embedding {
            Embedding::Kronecker => self.partial_trace_expectation(k, y),
            Embedding::JordanWigner => {
                // {1, c_k} is an orthonormal basis of the generated algebra
                let c = AlgElement::from_matrix(self.ambient.clone(), self.generators[k].clone())?;
                let one = AlgElement::identity(self.ambient.clone());
                let mean = y.trace();
                let along = c.trace_product(y)?;
                one.scale(mean).add(&c.scale(along))
            }
        }
    }

    fn partial_trace_expectation(&self, k: usize, y: &AlgElement) -> Result<AlgElement> {
        let total = self.ambient_dim();
        let d = self.dims[k];
        let stride: usize = self.dims[k + 1..].iter().product();
        let others = total / d;
        let index = |o: usize, a: usize| (o / stride) * (d * stride) + a * stride + o % stride;
        let m = &y.blocks()[0];
        let mut reduced = CMatrix::zeros(d);
        for o in 0..others {
            for a in 0..d {
                for b in 0..d {
                    reduced[(a, b)] += m[(index(o, a), index(o, b))];
                }
            }
        }
        let reduced = reduced.scale(Complex64::new(1.0 / others as f64, 0.0));
        let mut out = CMatrix::zeros(total);
        for o in 0..others {
            for a in 0..d {
                for b in 0..d {
                    out[(index(o, a), index(o, b))] = reduced[(a, b)];
                }
            }
        }
        AlgElement::from_matrix(self.ambient.clone(), out)
    }

    /// `sum_k x_k (x) r_k` on `M (x) L_infty(0,1)`, discretized to the `2^K`
    /// sign patterns `eps`, each an atom of mass `2^{-K}` carrying
    /// `sum_k eps_k x_k`.
    pub fn rademacher_expand(&self) -> Result<DirectSumElement> {
        let count = self.len();
        if count > MAX_RADEMACHER_FACTORS {
            return Err(Error::Budget(format!("{count} factors exceed {MAX_RADEMACHER_FACTORS} for sign enumeration")));
        }
        let patterns = 1usize << count;
        let mut summands = Vec::with_capacity(patterns);
        for mask in 0..patterns {
            let mut acc = AlgElement::zero(self.ambient.clone());
            for (k, x) in self.embedded.iter().enumerate() {
                let sign = if mask >> k & 1 == 1 { -1.0 } else { 1.0 };
                acc = acc.add(&x.scale_real(sign))?;
            }
            summands.push(acc);
        }
        Ok(DirectSumElement { summands, atom_mass: 1.0 / patterns as f64 })
    }
}

/// `X = sum_k x_k (x) e_k` where each `e_k` is an atom of mass `atom_mass`
/// (1 for `l_infty`, `2^{-K}` for the Rademacher discretization).
#[derive(Clone, Debug)]
pub struct DirectSumElement {
    summands: Vec<AlgElement>,
    atom_mass: f64,
}

impl DirectSumElement {
    pub fn new(summands: Vec<AlgElement>) -> Result<Self> {
        Self::with_atom_mass(summands, 1.0)
    }

    pub fn with_atom_mass(summands: Vec<AlgElement>, atom_mass: f64) -> Result<Self> {
        if let Some(first) = summands.first() {
            if summands.iter().any(|s| s.algebra() != first.algebra()) {
                return Err(Error::AlgebraMismatch);
            }
        }
        Ok(DirectSumElement { summands, atom_mass })
    }

    pub fn summands(&self) -> &[AlgElement] {
        &self.summands
    }

    pub fn atom_mass(&self) -> f64 {
        self.atom_mass
    }

    pub fn mu(&self) -> Result<StepFunction> {
        let parts = self
            .summands
            .iter()
            .map(|s| singular_value_function(s).map(|mu| mu.dilate(self.atom_mass)))
            .collect::<Result<Vec<_>>>()?;
        Ok(mu_of_direct_sum(&parts))
    }

    /// `(tau (x) Sigma)(X Y)`
    pub fn trace_pairing(&self, other: &DirectSumElement) -> Result<Complex64> {
        if self.summands.len() != other.summands.len() {
            return Err(Error::ShapeMismatch("direct sums of different length".into()));
        }
        let mut acc = C0;
        for (a, b) in self.summands.iter().zip(&other.summands) {
            acc += a.trace_product(b)?;
        }
        Ok(acc * self.atom_mass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Classical,
    GueLike,
    Fermionic,
    RankOne,
}

impl EnsembleKind {
    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::Classical => "classical",
            EnsembleKind::GueLike => "gue_like",
            EnsembleKind::Fermionic => "fermionic",
            EnsembleKind::RankOne => "rank_one",
        }
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "classical" => Ok(EnsembleKind::Classical),
            "gue_like" | "gue" => Ok(EnsembleKind::GueLike),
            "fermionic" => Ok(EnsembleKind::Fermionic),
            "rank_one" => Ok(EnsembleKind::RankOne),
            other => Err(Error::Config(format!("unknown ensemble kind `{other}`"))),
        }
    }
}

/// Distributional normalization applied to each raw factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    Raw,
    /// `x - tau(x) 1`
    MeanZero,
    /// `|x|`
    Positive,
}

/// `kind:K=..,n=..[,mean_zero=true|false][,positive]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    #[serde(rename = "K")]
    pub count: usize,
    pub n: usize,
    /// Left unset to let the experiment choose the law its hypothesis needs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<Law>,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, count: usize, n: usize) -> Self {
        EnsembleSpec { kind, count, n, law: None }
    }

    pub fn with_law(mut self, law: Law) -> Self {
        self.law = Some(law);
        self
    }
}

impl fmt::Display for EnsembleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:K={},n={}", self.kind.name(), self.count, self.n)?;
        match self.law {
            Some(Law::MeanZero) => write!(f, ",mean_zero=true"),
            Some(Law::Raw) => write!(f, ",mean_zero=false"),
            Some(Law::Positive) => write!(f, ",positive"),
            None => Ok(()),
        }
    }
}

impl FromStr for EnsembleSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let kind: EnsembleKind = kind.parse()?;
        let mut spec = EnsembleSpec::new(kind, 1, 2);
        if kind == EnsembleKind::Fermionic {
            spec.n = 2;
        }
        let mut saw_k = false;
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = item.split_once('=').unwrap_or((item, "true"));
            let as_usize = |v: &str| v.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad value in `{item}`")));
            match key.trim() {
                "K" | "k" => {
                    spec.count = as_usize(value)?;
                    saw_k = true;
                }
                "n" => spec.n = as_usize(value)?,
                "mean_zero" => match value.trim() {
                    "true" => spec.law = Some(Law::MeanZero),
                    "false" => spec.law = Some(Law::Raw),
                    _ => return Err(Error::Config(format!("bad value in `{item}`"))),
                },
                "positive" => spec.law = Some(Law::Positive),
                _ => return Err(Error::Config(format!("unknown ensemble field `{key}`"))),
            }
        }
        if kind == EnsembleKind::RankOne && !saw_k {
            spec.count = spec.n;
        }
        if spec.count == 0 || spec.n == 0 {
            return Err(Error::Config("K and n must be positive".into()));
        }
        Ok(spec)
    }
}

/// A sampled ensemble: an independent family, or for `rank_one` a plain
/// list of elements with no independence structure.
#[derive(Clone, Debug)]
pub enum Ensemble {
    Family(TensorFamily),
    Elements(Vec<AlgElement>),
}

impl Ensemble {
    pub fn family(&self) -> Option<&TensorFamily> {
        match self {
            Ensemble::Family(f) => Some(f),
            Ensemble::Elements(_) => None,
        }
    }

    /// The random variables in the common algebra.
    pub fn elements(&self) -> &[AlgElement] {
        match self {
            Ensemble::Family(f) => f.embedded(),
            Ensemble::Elements(xs) => xs,
        }
    }
}

fn apply_law(x: AlgElement, law: Law) -> Result<AlgElement> {
    match law {
        Law::Raw => Ok(x),
        Law::MeanZero => Ok(x.centered()),
        Law::Positive => x.abs_op(),
    }
}

fn gaussian_hermitian(n: usize, rng: &mut Stream) -> CMatrix {
    // (A + A^*) / 2 with iid complex Gaussian A, entries of unit variance
    let mut a = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = Complex64::new(rng.gaussian(), rng.gaussian()) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    a.add(&a.adjoint()).scale(Complex64::new(0.5, 0.0))
}

/// Samples an ensemble. The stream for each draw is keyed by
/// `(kind, K, n, seed, trial)`.
pub fn sample_ensemble(spec: &EnsembleSpec, seed: u64, trial: u64) -> Result<Ensemble> {
    let law = spec.law.unwrap_or(Law::Raw);
    let mut rng = Stream::from_parts(&[label_hash(spec.kind.name()), spec.count as u64, spec.n as u64, seed, trial]);
    match spec.kind {
        EnsembleKind::RankOne => {
            let alg = TracialAlgebra::matrix(spec.n)?.shared();
            if spec.count > spec.n {
                return Err(Error::Config(format!("rank_one needs K <= n, got K={} n={}", spec.count, spec.n)));
            }
            let xs = (0..spec.count)
                .map(|k| AlgElement::matrix_unit(alg.clone(), 0, k, 0).and_then(|x| apply_law(x, law)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Ensemble::Elements(xs))
        }
        EnsembleKind::Fermionic => {
            check_budget(spec.count, 1usize.checked_shl(spec.count as u32).unwrap_or(usize::MAX))?;
            let alg = TracialAlgebra::matrix(2)?.shared();
            let factors = (0..spec.count)
                .map(|_| {
                    let a = rng.gaussian();
                    let b = rng.gaussian();
                    let m = CMatrix::identity(2).scale(Complex64::new(a, 0.0)).add(&pauli::x().scale(Complex64::new(b, 0.0)));
                    AlgElement::from_matrix(alg.clone(), m).and_then(|x| apply_law(x, law))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Ensemble::Family(TensorFamily::fermionic(factors)?))
        }
        EnsembleKind::Classical | EnsembleKind::GueLike => {
            let dims = vec![spec.n; spec.count];
            check_budget(spec.count, 0)?;
            checked_product(&dims)?;
            let alg = TracialAlgebra::matrix(spec.n)?.shared();
            let factors = (0..spec.count)
                .map(|_| {
                    let m = if spec.kind == EnsembleKind::Classical {
                        let diag: Vec<f64> = (0..spec.n).map(|_| rng.gaussian()).collect();
                        CMatrix::from_real_diagonal(&diag)
                    } else {
                        gaussian_hermitian(spec.n, &mut rng)
                    };
                    AlgElement::from_matrix(alg.clone(), m).and_then(|x| apply_law(x, law))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Ensemble::Family(TensorFamily::build(factors)?))
        }
    }
}

/// A random element of the ambient algebra of a family (Hermitian when
/// `hermitian`, otherwise with iid complex Gaussian entries).
pub fn random_ambient_element(family: &TensorFamily, hermitian: bool, rng: &mut Stream) -> Result<AlgElement> {
    let d = family.ambient_dim();
    let m = if hermitian {
        gaussian_hermitian(d, rng)
    } else {
        let mut a = CMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                a[(i, j)] = Complex64::new(rng.gaussian(), rng.gaussian());
            }
        }
        a
    };
    AlgElement::from_matrix(family.ambient().clone(), m)
}

pub fn ambient_identity(family: &TensorFamily) -> AlgElement {
    AlgElement::identity(family.ambient().clone())
}
