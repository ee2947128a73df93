//! Finite-dimensional tracial algebras: finite direct sums of full matrix
//! blocks `M_{n_1} (+) ... (+) M_{n_r}` with trace
//! `tau(x) = sum_i w_i Tr(x_i)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, CMatrix, C0};

/// Entrywise tolerance for the Hermitian flag.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
/// Relative tolerance on `total_mass = 1` for probability spaces.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracialAlgebra {
    blocks: Vec<Block>,
    total_mass: f64,
    probability: bool,
}

impl TracialAlgebra {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidAlgebra("no blocks".into()));
        }
        for b in &blocks {
            if b.dim == 0 {
                return Err(Error::InvalidAlgebra("block dimension must be positive".into()));
            }
            if !(b.weight > 0.0 && b.weight.is_finite()) {
                return Err(Error::InvalidAlgebra(format!("block weight {} is not positive", b.weight)));
            }
        }
        let total_mass = blocks.iter().map(|b| b.weight * b.dim as f64).sum();
        Ok(TracialAlgebra { blocks, total_mass, probability: false })
    }

    /// Same as [`TracialAlgebra::new`] but insists on `tau(1) = 1`.
    pub fn probability(blocks: Vec<Block>) -> Result<Self> {
        let mut alg = Self::new(blocks)?;
        if (alg.total_mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidAlgebra(format!(
                "probability space must have unit mass, got {}",
                alg.total_mass
            )));
        }
        alg.probability = true;
        Ok(alg)
    }

    /// `(M_n, (1/n) Tr)`
    pub fn matrix(n: usize) -> Result<Self> {
        Self::probability(vec![Block { dim: n, weight: 1.0 / n.max(1) as f64 }])
    }

    /// Discretized `L_infty(0,1)` on `atoms` equal cells.
    pub fn diagonal(atoms: usize) -> Result<Self> {
        Self::probability(vec![Block { dim: 1, weight: 1.0 / atoms.max(1) as f64 }; atoms])
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn is_probability_space(&self) -> bool {
        self.probability
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

/// An element of a [`TracialAlgebra`], stored block by block.
#[derive(Clone, Debug)]
pub struct AlgElement {
    algebra: Arc<TracialAlgebra>,
    blocks: Vec<CMatrix>,
    hermitian: bool,
}

fn same_algebra(a: &Arc<TracialAlgebra>, b: &Arc<TracialAlgebra>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl AlgElement {
    /// Builds an element; the Hermitian flag is set by a runtime check.
    pub fn new(algebra: Arc<TracialAlgebra>, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != algebra.blocks.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks given, algebra has {}",
                blocks.len(),
                algebra.blocks.len()
            )));
        }
        for (i, (m, b)) in blocks.iter().zip(&algebra.blocks).enumerate() {
            if m.dim() != b.dim {
                return Err(Error::ShapeMismatch(format!(
                    "block {i} has dim {}, expected {}",
                    m.dim(),
                    b.dim
                )));
            }
        }
        let hermitian = blocks.iter().all(|m| m.is_hermitian(HERMITIAN_TOLERANCE));
        Ok(AlgElement { algebra, blocks, hermitian })
    }

    fn with_flag(algebra: Arc<TracialAlgebra>, blocks: Vec<CMatrix>, hermitian: bool) -> Self {
        AlgElement { algebra, blocks, hermitian }
    }

    pub fn zero(algebra: Arc<TracialAlgebra>) -> Self {
        let blocks = algebra.blocks.iter().map(|b| CMatrix::zeros(b.dim)).collect();
        Self::with_flag(algebra, blocks, true)
    }

    pub fn identity(algebra: Arc<TracialAlgebra>) -> Self {
        let blocks = algebra.blocks.iter().map(|b| CMatrix::identity(b.dim)).collect();
        Self::with_flag(algebra, blocks, true)
    }

    /// Single-block convenience constructor.
    pub fn from_matrix(algebra: Arc<TracialAlgebra>, m: CMatrix) -> Result<Self> {
        Self::new(algebra, vec![m])
    }

    /// Matrix unit `e_{row,col}` in block `block`.
    pub fn matrix_unit(algebra: Arc<TracialAlgebra>, block: usize, row: usize, col: usize) -> Result<Self> {
        let dims: Vec<usize> = algebra.blocks.iter().map(|b| b.dim).collect();
        let Some(&n) = dims.get(block) else {
            return Err(Error::ShapeMismatch(format!("no block {block}")));
        };
        if row >= n || col >= n {
            return Err(Error::ShapeMismatch(format!("unit ({row},{col}) outside a {n}x{n} block")));
        }
        let blocks = dims
            .iter()
            .enumerate()
            .map(|(i, &d)| if i == block { CMatrix::unit(d, row, col) } else { CMatrix::zeros(d) })
            .collect();
        Ok(Self::with_flag(algebra, blocks, row == col))
    }

    /// Real diagonal element; `diag` runs over all blocks in order.
    pub fn from_real_diagonal(algebra: Arc<TracialAlgebra>, diag: &[f64]) -> Result<Self> {
        let mut blocks = Vec::with_capacity(algebra.blocks.len());
        let mut offset = 0;
        for b in &algebra.blocks {
            let Some(part) = diag.get(offset..offset + b.dim) else {
                return Err(Error::ShapeMismatch("diagonal too short".into()));
            };
            blocks.push(CMatrix::from_real_diagonal(part));
            offset += b.dim;
        }
        if offset != diag.len() {
            return Err(Error::ShapeMismatch("diagonal too long".into()));
        }
        Ok(Self::with_flag(algebra, blocks, true))
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.blocks.iter().map(CMatrix::hermitian_defect).fold(0.0, f64::max)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if same_algebra(&self.algebra, &other.algebra) {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch)
        }
    }

    /// `tau(x) = sum_i w_i Tr(x_i)`
    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().zip(&self.algebra.blocks).map(|(m, b)| m.trace() * b.weight).sum()
    }

    /// `tau(x y)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .zip(&self.algebra.blocks)
            .map(|((a, b), blk)| a.trace_product(b) * blk.weight)
            .sum())
    }

    /// `tau(x^* x)`, the squared `L_2` norm.
    pub fn l2_norm_sqr(&self) -> f64 {
        self.blocks
            .iter()
            .zip(&self.algebra.blocks)
            .map(|(m, b)| m.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() * b.weight)
            .sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::with_flag(self.algebra.clone(), self.blocks.iter().map(CMatrix::adjoint).collect(), self.hermitian)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.add(b)).collect();
        Ok(Self::with_flag(self.algebra.clone(), blocks, self.hermitian && other.hermitian))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.sub(b)).collect();
        Ok(Self::with_flag(self.algebra.clone(), blocks, self.hermitian && other.hermitian))
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        let blocks = self.blocks.iter().map(|m| m.scale(alpha)).collect();
        Self::with_flag(self.algebra.clone(), blocks, self.hermitian && alpha.im == 0.0)
    }

    pub fn scale_real(&self, alpha: f64) -> Self {
        self.scale(Complex64::new(alpha, 0.0))
    }

    /// `x - tau(x) 1`, assuming a probability space.
    pub fn centered(&self) -> Self {
        let t = self.trace() / self.algebra.total_mass;
        let mut blocks = self.blocks.clone();
        for m in &mut blocks {
            for i in 0..m.dim() {
                m[(i, i)] -= t;
            }
        }
        Self::with_flag(self.algebra.clone(), blocks, self.hermitian && t.im == 0.0)
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.matmul(b)).collect();
        Ok(Self::with_flag(self.algebra.clone(), blocks, false))
    }

    /// `x^* x`, always Hermitian.
    pub fn gram(&self) -> Self {
        Self::with_flag(self.algebra.clone(), self.blocks.iter().map(CMatrix::gram).collect(), true)
    }

    /// Blockwise sum of many elements of one algebra.
    pub fn sum<'a>(algebra: Arc<TracialAlgebra>, items: impl IntoIterator<Item = &'a AlgElement>) -> Result<Self> {
        let mut acc = Self::zero(algebra);
        for x in items {
            acc.check_same(x)?;
            for (a, b) in acc.blocks.iter_mut().zip(&x.blocks) {
                a.axpy(crate::linalg::C1, b);
            }
            acc.hermitian &= x.hermitian;
        }
        Ok(acc)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.sub(b).max_abs()).fold(0.0, f64::max))
    }

    fn require_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOLERANCE {
            Err(Error::NotHermitian { defect })
        } else {
            Ok(())
        }
    }

    /// Eigenvalues of each (Hermitian) block.
    pub fn eigenvalues(&self) -> Result<Vec<Vec<f64>>> {
        self.require_hermitian()?;
        self.blocks.iter().map(hermitian_eigenvalues).collect()
    }

    /// Eigenvalues of `|x|`, block by block, computed from `x` directly when
    /// Hermitian and from `x^* x` otherwise.
    pub fn singular_values(&self) -> Result<Vec<Vec<f64>>> {
        if self.hermitian_defect() <= HERMITIAN_TOLERANCE {
            Ok(self.eigenvalues()?.into_iter().map(|v| v.into_iter().map(f64::abs).collect()).collect())
        } else {
            self.gram()
                .eigenvalues()
                .map(|bs| bs.into_iter().map(|v| v.into_iter().map(|l| l.max(0.0).sqrt()).collect()).collect())
        }
    }

    /// Operator norm `||x||_infty`.
    pub fn operator_norm(&self) -> Result<f64> {
        Ok(self.singular_values()?.into_iter().flatten().fold(0.0, f64::max))
    }

    /// `f(x)` by the spectral theorem: `U f(D) U^*` in each block.
    pub fn functional_calculus(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.require_hermitian()?;
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for m in &self.blocks {
            let eig = hermitian_eigen(m, true)?;
            let vals: Vec<f64> = eig.values.iter().map(|&l| f(l)).collect();
            blocks.push(CMatrix::reconstruct(eig.vectors.as_ref().expect("vectors requested"), &vals));
        }
        Ok(Self::with_flag(self.algebra.clone(), blocks, true))
    }

    /// `|x| = (x^* x)^{1/2}`
    pub fn abs_op(&self) -> Result<Self> {
        self.gram().functional_calculus(|l| l.max(0.0).sqrt())
    }

    /// Spectral projection `e_{(s, infty)}(|x|)`. Eigenvalues within the tie
    /// tolerance `1e-12 (1 + ||x||)` of `s` are excluded.
    pub fn spectral_projection_above(&self, s: f64) -> Result<Self> {
        let abs = self.abs_op()?;
        let norm = abs.operator_norm()?;
        let cut = s + 1e-12 * (1.0 + norm);
        abs.functional_calculus(|l| if l > cut { 1.0 } else { 0.0 })
    }

    pub fn to_doc(&self) -> MatrixDoc {
        MatrixDoc {
            blocks: self
                .blocks
                .iter()
                .zip(&self.algebra.blocks)
                .map(|(m, b)| BlockDoc {
                    dim: b.dim,
                    weight: b.weight,
                    entries: (0..m.dim()).map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect()).collect(),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &MatrixDoc) -> Result<Self> {
        let algebra = TracialAlgebra::new(doc.blocks.iter().map(|b| Block { dim: b.dim, weight: b.weight }).collect())?;
        let mut blocks = Vec::with_capacity(doc.blocks.len());
        for (i, b) in doc.blocks.iter().enumerate() {
            let rows: Vec<Vec<Complex64>> = b
                .entries
                .iter()
                .map(|row| row.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
                .collect();
            let m = CMatrix::from_rows(&rows)
                .filter(|m| m.dim() == b.dim)
                .ok_or_else(|| Error::ShapeMismatch(format!("block {i} entries are not {0}x{0}", b.dim)))?;
            blocks.push(m);
        }
        Self::new(Arc::new(algebra), blocks)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(text)?)
    }
}

/// JSON layout `{"blocks": [{"dim", "weight", "entries": [[[re, im], ...], ...]}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub blocks: Vec<BlockDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockDoc {
    pub dim: usize,
    pub weight: f64,
    pub entries: Vec<Vec<[f64; 2]>>,
}

/// Pauli matrices, used by the fermionic ensemble and in tests.
pub mod pauli {
    use super::*;

    pub fn x() -> CMatrix {
        let one = Complex64::new(1.0, 0.0);
        CMatrix::from_rows(&[vec![C0, one], vec![one, C0]]).unwrap()
    }

    pub fn z() -> CMatrix {
        CMatrix::from_real_diagonal(&[1.0, -1.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: usize) -> Arc<TracialAlgebra> {
        TracialAlgebra::matrix(n).unwrap().shared()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn trace_examples() {
        assert!(close(AlgElement::identity(m(2)).trace().re, 1.0, 1e-15));
        let e00 = AlgElement::matrix_unit(m(5), 0, 0, 0).unwrap();
        assert!(close(e00.trace().re, 0.2, 1e-15));
        let d = AlgElement::from_real_diagonal(m(3), &[3.0, 1.0, 2.0]).unwrap();
        assert!(close(d.trace().re, 2.0, 1e-15));
    }

    #[test]
    fn weighted_blocks_and_total_mass() {
        let alg = TracialAlgebra::new(vec![Block { dim: 2, weight: 0.25 }, Block { dim: 1, weight: 0.5 }]).unwrap();
        assert!(close(alg.total_mass(), 1.0, 1e-15));
        let one = AlgElement::identity(alg.shared());
        assert!(close(one.trace().re, 1.0, 1e-15));
    }

    #[test]
    fn rejects_bad_algebras() {
        assert!(TracialAlgebra::new(vec![Block { dim: 0, weight: 1.0 }]).is_err());
        assert!(TracialAlgebra::new(vec![Block { dim: 2, weight: -1.0 }]).is_err());
        assert!(TracialAlgebra::probability(vec![Block { dim: 2, weight: 1.0 }]).is_err());
    }

    #[test]
    fn matrix_unit_calculus() {
        let a = m(4);
        let e20 = AlgElement::matrix_unit(a.clone(), 0, 2, 0).unwrap();
        let e02 = AlgElement::matrix_unit(a.clone(), 0, 0, 2).unwrap();
        assert_eq!(e20.adjoint().blocks(), e02.blocks());
        let prod = e02.multiply(&e20).unwrap();
        assert_eq!(prod.blocks(), AlgElement::matrix_unit(a.clone(), 0, 0, 0).unwrap().blocks());
        let zero = e20.add(&e20.scale_real(-1.0)).unwrap();
        assert_eq!(zero.max_abs_diff(&AlgElement::zero(a)).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_algebras_are_rejected() {
        let x = AlgElement::identity(m(2));
        let y = AlgElement::identity(m(3));
        assert!(matches!(x.add(&y), Err(Error::AlgebraMismatch)));
        assert!(matches!(x.multiply(&y), Err(Error::AlgebraMismatch)));
    }

    #[test]
    fn functional_calculus_examples() {
        let d = AlgElement::from_real_diagonal(m(2), &[1.0, -2.0]).unwrap();
        let same = d.functional_calculus(|t| t).unwrap();
        assert!(same.max_abs_diff(&d).unwrap() <= 1e-10);
        let sq = d.functional_calculus(|t| t * t).unwrap();
        let want = AlgElement::from_real_diagonal(m(2), &[1.0, 4.0]).unwrap();
        assert!(sq.max_abs_diff(&want).unwrap() <= 1e-12);

        let sx = AlgElement::from_matrix(m(2), pauli::x()).unwrap();
        let abs = sx.functional_calculus(f64::abs).unwrap();
        assert!(abs.max_abs_diff(&AlgElement::identity(m(2))).unwrap() <= 1e-12);
    }

    #[test]
    fn functional_calculus_rejects_non_hermitian() {
        let e10 = AlgElement::matrix_unit(m(2), 0, 1, 0).unwrap();
        assert!(matches!(e10.functional_calculus(|t| t), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn abs_examples() {
        let e10 = AlgElement::matrix_unit(m(2), 0, 1, 0).unwrap();
        let e00 = AlgElement::matrix_unit(m(2), 0, 0, 0).unwrap();
        assert!(e10.abs_op().unwrap().max_abs_diff(&e00).unwrap() <= 1e-12);

        let d = AlgElement::from_real_diagonal(m(2), &[-3.0, 2.0]).unwrap();
        let want = AlgElement::from_real_diagonal(m(2), &[3.0, 2.0]).unwrap();
        assert!(d.abs_op().unwrap().max_abs_diff(&want).unwrap() <= 1e-12);

        let z2 = AlgElement::from_matrix(m(2), pauli::z().scale(Complex64::new(2.0, 0.0))).unwrap();
        let want = AlgElement::from_real_diagonal(m(2), &[2.0, 2.0]).unwrap();
        assert!(z2.abs_op().unwrap().max_abs_diff(&want).unwrap() <= 1e-12);
    }

    #[test]
    fn spectral_projection_examples() {
        let d = AlgElement::from_real_diagonal(m(3), &[3.0, 1.0, 2.0]).unwrap();
        let p = d.spectral_projection_above(1.5).unwrap();
        let want = AlgElement::from_real_diagonal(m(3), &[1.0, 0.0, 1.0]).unwrap();
        assert!(p.max_abs_diff(&want).unwrap() <= 1e-12);

        let inv = AlgElement::from_real_diagonal(m(3), &[0.5, -1.0, 2.0]).unwrap();
        let p = inv.spectral_projection_above(0.0).unwrap();
        assert!(p.max_abs_diff(&AlgElement::identity(m(3))).unwrap() <= 1e-12);

        let sz = AlgElement::from_matrix(m(2), pauli::z()).unwrap();
        let p = sz.spectral_projection_above(1.0).unwrap();
        assert!(p.max_abs_diff(&AlgElement::zero(m(2))).unwrap() <= 1e-12);
    }

    #[test]
    fn json_round_trip_keeps_layout() {
        let alg = TracialAlgebra::new(vec![Block { dim: 2, weight: 0.25 }, Block { dim: 1, weight: 0.5 }])
            .unwrap()
            .shared();
        let mut b0 = CMatrix::zeros(2);
        b0[(0, 1)] = Complex64::new(1.0, -2.0);
        let x = AlgElement::new(alg, vec![b0, CMatrix::identity(1)]).unwrap();
        let text = x.to_json().unwrap();
        assert!(text.starts_with("{\"blocks\":[{\"dim\":2,\"weight\":0.25,\"entries\":[[[0.0,0.0],[1.0,-2.0]]"));
        let back = AlgElement::from_json(&text).unwrap();
        assert_eq!(back.blocks(), x.blocks());
        assert!(!back.is_hermitian_flagged());
    }

    #[test]
    fn json_shape_errors() {
        let bad = r#"{"blocks":[{"dim":2,"weight":0.5,"entries":[[[1,0]]]}]}"#;
        assert!(matches!(AlgElement::from_json(bad), Err(Error::ShapeMismatch(_))));
    }
}
