//! The linear maps `T`, `T*`, `S`, `S*`, `L` between a family's ambient
//! algebra and its direct sums / column spaces, plus the square function.

use num_complex::Complex64;
use std::sync::Arc;

use crate::algebra::{AlgElement, Block, TracialAlgebra};
use crate::error::{Error, Result};
use crate::independence::{DirectSumElement, TensorFamily};
use crate::linalg::{CMatrix, C0};
use crate::rearrangement::{singular_value_function, StepFunction};

/// `E_k(y) - tau(y) 1`
fn centered_expectation(family: &TensorFamily, k: usize, y: &AlgElement) -> Result<AlgElement> {
    let e = family.conditional_expectation(k, y)?;
    let one = AlgElement::identity(family.ambient().clone());
    e.sub(&one.scale(y.trace()))
}

/// `T(sum_k z_k (x) e_k) = sum_k E_k(z_k) - tau(z_k)`
pub fn op_t(family: &TensorFamily, z: &DirectSumElement) -> Result<AlgElement> {
    if z.summands().len() != family.len() {
        return Err(Error::ShapeMismatch(format!(
            "direct sum has {} summands, family has {} factors",
            z.summands().len(),
            family.len()
        )));
    }
    let parts = z
        .summands()
        .iter()
        .enumerate()
        .map(|(k, zk)| centered_expectation(family, k, zk))
        .collect::<Result<Vec<_>>>()?;
    AlgElement::sum(family.ambient().clone(), &parts)
}

/// `T*(w) = sum_k (E_k(w) - tau(w)) (x) e_k`
pub fn op_t_star(family: &TensorFamily, w: &AlgElement) -> Result<DirectSumElement> {
    let summands = (0..family.len()).map(|k| centered_expectation(family, k, w)).collect::<Result<Vec<_>>>()?;
    DirectSumElement::new(summands)
}

/// `sum_k c_k (x) e_{k,0}` in `M (x) L(l_2)`, stored as its first column.
#[derive(Clone, Debug)]
pub struct Column {
    entries: Vec<AlgElement>,
}

impl Column {
    pub fn new(entries: Vec<AlgElement>) -> Result<Self> {
        if let Some(first) = entries.first() {
            if entries.iter().any(|e| e.algebra() != first.algebra()) {
                return Err(Error::AlgebraMismatch);
            }
        }
        Ok(Column { entries })
    }

    pub fn entries(&self) -> &[AlgElement] {
        &self.entries
    }

    /// `|c|^2 = sum_k c_k^* c_k`, sitting at the `e_{0,0}` corner.
    pub fn modulus_squared(&self) -> Result<AlgElement> {
        let first = self.entries.first().ok_or_else(|| Error::ShapeMismatch("empty column".into()))?;
        let grams: Vec<AlgElement> = self.entries.iter().map(AlgElement::gram).collect();
        AlgElement::sum(first.algebra().clone(), &grams)
    }

    /// `mu(c) = mu(|c|^2)^{1/2}`
    pub fn mu(&self) -> Result<StepFunction> {
        if self.entries.is_empty() {
            return Ok(StepFunction::zero());
        }
        Ok(singular_value_function(&self.modulus_squared()?)?.powf(0.5))
    }

    /// `(tau (x) Tr)(c r)` for the row `r = sum_k r_k (x) e_{0,k}`:
    /// `sum_k tau(c_k r_k)`.
    pub fn pairing(&self, row: &[AlgElement]) -> Result<Complex64> {
        if row.len() != self.entries.len() {
            return Err(Error::ShapeMismatch("row and column lengths differ".into()));
        }
        let mut acc = C0;
        for (c, r) in self.entries.iter().zip(row) {
            acc += c.trace_product(r)?;
        }
        Ok(acc)
    }
}

/// `S(z) = sum_k (E_k(z) - tau(z)) (x) e_{k,0}`
pub fn op_s(family: &TensorFamily, z: &AlgElement) -> Result<Column> {
    let entries = (0..family.len()).map(|k| centered_expectation(family, k, z)).collect::<Result<Vec<_>>>()?;
    Column::new(entries)
}

/// `S*(sum_k z_k (x) e_{k,0}) = sum_k E_k(z_k) - tau(z_k)`
pub fn op_s_star(family: &TensorFamily, z: &Column) -> Result<AlgElement> {
    if z.entries.len() != family.len() {
        return Err(Error::ShapeMismatch(format!(
            "column has {} entries, family has {} factors",
            z.entries.len(),
            family.len()
        )));
    }
    let parts = z
        .entries
        .iter()
        .enumerate()
        .map(|(k, zk)| centered_expectation(family, k, zk))
        .collect::<Result<Vec<_>>>()?;
    AlgElement::sum(family.ambient().clone(), &parts)
}

/// A finite matrix `sum_{k,l} z_{k,l} (x) e_{k,l}` over one algebra.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    rows: Vec<Vec<AlgElement>>,
}

impl OperatorMatrix {
    pub fn new(rows: Vec<Vec<AlgElement>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("operator matrix must be a nonempty rectangle".into()));
        }
        let alg = rows[0][0].algebra();
        if rows.iter().flatten().any(|e| e.algebra() != alg) {
            return Err(Error::AlgebraMismatch);
        }
        Ok(OperatorMatrix { rows })
    }

    pub fn rows(&self) -> &[Vec<AlgElement>] {
        &self.rows
    }

    /// Realizes the matrix as one element of `A (x) M_m`, `m = max(rows, cols)`,
    /// padding with zeros; block `i` becomes a `d_i m` square with weight `w_i`.
    pub fn assemble(&self) -> Result<AlgElement> {
        let alg = self.rows[0][0].algebra();
        let m = self.rows.len().max(self.rows[0].len());
        let blocks: Vec<Block> = alg.blocks().iter().map(|b| Block { dim: b.dim * m, weight: b.weight }).collect();
        let big = Arc::new(TracialAlgebra::new(blocks)?);
        let mats = alg
            .blocks()
            .iter()
            .enumerate()
            .map(|(bi, b)| {
                let d = b.dim;
                let mut out = CMatrix::zeros(d * m);
                for (k, row) in self.rows.iter().enumerate() {
                    for (l, e) in row.iter().enumerate() {
                        let src = &e.blocks()[bi];
                        for i in 0..d {
                            for j in 0..d {
                                out[(k * d + i, l * d + j)] = src[(i, j)];
                            }
                        }
                    }
                }
                out
            })
            .collect();
        AlgElement::new(big, mats)
    }

    pub fn mu(&self) -> Result<StepFunction> {
        singular_value_function(&self.assemble()?)
    }
}

/// `L z = sum_k z_{k,0} (x) e_k`
pub fn op_l(z: &OperatorMatrix) -> Result<DirectSumElement> {
    DirectSumElement::new(z.rows.iter().map(|r| r[0].clone()).collect())
}

/// `(sum_k x_k^* x_k)^{1/2}`, which is `(sum_k x_k^2)^{1/2}` for Hermitian inputs.
pub fn square_function(xs: &[AlgElement]) -> Result<AlgElement> {
    gram_sum(xs, false)?.functional_calculus(|t| t.max(0.0).sqrt())
}

/// `(sum_k x_k x_k^*)^{1/2}`
pub fn square_function_adjoint(xs: &[AlgElement]) -> Result<AlgElement> {
    gram_sum(xs, true)?.functional_calculus(|t| t.max(0.0).sqrt())
}

/// `mu((sum_k |x_k|^2)^{1/2})` (or with `|x_k^*|` when `adjoint`) without
/// forming the square root.
pub fn square_function_mu(xs: &[AlgElement], adjoint: bool) -> Result<StepFunction> {
    Ok(singular_value_function(&gram_sum(xs, adjoint)?)?.powf(0.5))
}

fn gram_sum(xs: &[AlgElement], adjoint: bool) -> Result<AlgElement> {
    let first = xs.first().ok_or_else(|| Error::ShapeMismatch("empty list".into()))?;
    let grams: Vec<AlgElement> = xs.iter().map(|x| if adjoint { x.adjoint().gram() } else { x.gram() }).collect();
    AlgElement::sum(first.algebra().clone(), &grams)
}
