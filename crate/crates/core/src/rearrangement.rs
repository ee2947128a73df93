//! Generalized singular value functions represented exactly as decreasing
//! step functions on `(0, infty)`.

use serde::{Deserialize, Serialize};

use crate::algebra::AlgElement;
use crate::error::{Error, Result};

/// Values within `MERGE_TOLERANCE * (1 + max value)` are one step.
pub const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    #[serde(rename = "v")]
    pub value: f64,
    #[serde(rename = "len")]
    pub length: f64,
}

/// `t -> value_j` on the j-th consecutive interval, zero past the support.
/// Values are strictly decreasing and positive; the zero function is empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StepFunction {
    steps: Vec<Step>,
}

impl StepFunction {
    pub fn zero() -> Self {
        StepFunction { steps: Vec::new() }
    }

    /// Decreasing rearrangement of arbitrary `(value, length)` pairs.
    /// Nonpositive values, negligible values and empty lengths are dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut raw: Vec<(f64, f64)> = pairs
            .into_iter()
            .filter(|&(v, l)| v > 0.0 && l > 0.0 && v.is_finite())
            .collect();
        if raw.is_empty() {
            return Self::zero();
        }
        raw.sort_by(|a, b| b.0.total_cmp(&a.0));
        let tol = MERGE_TOLERANCE * (1.0 + raw[0].0);
        let mut steps: Vec<Step> = Vec::new();
        // group anchor value, weighted sum, total length
        let mut group: Option<(f64, f64, f64)> = None;
        for (v, l) in raw {
            match group {
                Some((anchor, wsum, len)) if anchor - v <= tol => group = Some((anchor, wsum + v * l, len + l)),
                _ => {
                    if let Some((_, wsum, len)) = group {
                        steps.push(Step { value: wsum / len, length: len });
                    }
                    group = Some((v, v * l, l));
                }
            }
        }
        if let Some((_, wsum, len)) = group {
            steps.push(Step { value: wsum / len, length: len });
        }
        steps.retain(|s| s.value > tol);
        StepFunction { steps }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn is_zero(&self) -> bool {
        self.steps.is_empty()
    }

    /// `mu(0+)`, the largest value.
    pub fn top(&self) -> f64 {
        self.steps.first().map_or(0.0, |s| s.value)
    }

    pub fn support_length(&self) -> f64 {
        self.steps.iter().map(|s| s.length).sum()
    }

    /// Right endpoints of the steps.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.steps
            .iter()
            .map(|s| {
                acc += s.length;
                acc
            })
            .collect()
    }

    /// `mu(t)`, right-continuous.
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for s in &self.steps {
            acc += s.length;
            if t < acc {
                return s.value;
            }
        }
        0.0
    }

    /// `t -> alpha mu(t)`
    pub fn scale(&self, alpha: f64) -> Self {
        Self::from_pairs(self.steps.iter().map(|s| (alpha * s.value, s.length)))
    }

    /// `t -> mu(t / c)`, i.e. every length multiplied by `c`.
    pub fn dilate(&self, c: f64) -> Self {
        Self::from_pairs(self.steps.iter().map(|s| (s.value, c * s.length)))
    }

    /// `t -> mu(t)^r`, which is again decreasing.
    pub fn powf(&self, r: f64) -> Self {
        Self::from_pairs(self.steps.iter().map(|s| (s.value.powf(r), s.length)))
    }

    /// `t -> mu(a + t)` on `(0, b - a)`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Self::from_pairs(self.overlaps(a, b)))
    }

    /// `(value, |interval_j cap (a, b)|)` for every step.
    fn overlaps(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mut left = 0.0;
        self.steps.iter().map(move |s| {
            let right = left + s.length;
            let overlap = (right.min(b) - left.max(a)).max(0.0);
            left = right;
            (s.value, overlap)
        })
    }

    /// `int_a^b mu(t)^p dt` as an exact piecewise sum.
    pub fn integrate_power(&self, p: f64, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0 && a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(self.overlaps(a, b).filter(|&(_, l)| l > 0.0).map(|(v, l)| v.powf(p) * l).sum())
    }

    /// `int_0^t mu`, concave and piecewise linear in `t`.
    pub fn cumulative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let mut left = 0.0;
        let mut acc = 0.0;
        for s in &self.steps {
            let right = left + s.length;
            if t <= right {
                return acc + s.value * (t - left);
            }
            acc += s.value * s.length;
            left = right;
        }
        acc
    }

    /// `int_0^infty mu`
    pub fn total_integral(&self) -> f64 {
        self.steps.iter().map(|s| s.value * s.length).sum()
    }

    /// `sup_t |self(t) - other(t)|` evaluated at every breakpoint of either.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        let mut pts: Vec<f64> = vec![0.0];
        pts.extend(self.breakpoints());
        pts.extend(other.breakpoints());
        pts.iter().map(|&t| (self.eval(t) - other.eval(t)).abs()).fold(0.0, f64::max)
    }
}

/// `mu(x)`: eigenvalues of `|x|`, each eigenvalue of block `i` carrying
/// length `weight_i`, sorted decreasingly.
pub fn singular_value_function(x: &AlgElement) -> Result<StepFunction> {
    let svals = x.singular_values()?;
    Ok(StepFunction::from_pairs(
        svals
            .iter()
            .zip(x.algebra().blocks())
            .flat_map(|(vals, b)| vals.iter().map(move |&v| (v, b.weight))),
    ))
}

/// `mu(sum_k x_k (x) e_k)` from the `mu(x_k)`: decreasing rearrangement of
/// the concatenated steps.
pub fn mu_of_direct_sum(parts: &[StepFunction]) -> StepFunction {
    StepFunction::from_pairs(parts.iter().flat_map(|p| p.steps.iter().map(|s| (s.value, s.length))))
}
