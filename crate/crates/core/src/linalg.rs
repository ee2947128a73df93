//! Dense complex square matrices and a cyclic Jacobi eigensolver for
//! Hermitian matrices.

use num_complex::Complex64;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

pub const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const C1: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Off-diagonal Frobenius mass relative to the block norm at which Jacobi stops.
pub const JACOBI_TOLERANCE: f64 = 1e-13;
/// Maximum number of full cyclic sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Row-major dense complex square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![C0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C1;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Matrix unit with a one at `(row, col)`.
    pub fn unit(n: usize, row: usize, col: usize) -> Self {
        let mut m = Self::zeros(n);
        m[(row, col)] = C1;
        m
    }

    /// Builds from row-major entries; `None` if the length is not `n * n`.
    pub fn from_vec(n: usize, data: Vec<Complex64>) -> Option<Self> {
        (data.len() == n * n).then_some(CMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(CMatrix { n, data: rows.iter().flatten().copied().collect() })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        CMatrix { n: self.n, data: self.data.iter().map(|a| a * alpha).collect() }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: Complex64, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        debug_assert_eq!(n, other.n);
        let mut out = Self::zeros(n);
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C0 {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self^* self` without forming the adjoint.
    pub fn gram(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for k in 0..n {
            let row = self.row(k);
            for i in 0..n {
                let a = row[i].conj();
                if a == C0 {
                    continue;
                }
                for (o, &r) in out.data[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * r;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// `Tr(self * other)` in O(n^2).
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        let n = self.n;
        let mut acc = C0;
        for i in 0..n {
            for j in 0..n {
                acc += self.data[i * n + j] * other.data[j * n + i];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.n, other.n);
        let dim = n * m;
        let mut out = Self::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                if a == C0 {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out.data[(i * m + k) * dim + j * m + l] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// `U diag(values) U^*`
    pub fn reconstruct(vectors: &Self, values: &[f64]) -> Self {
        let n = vectors.n;
        let mut out = Self::zeros(n);
        for (k, &v) in values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for i in 0..n {
                let a = vectors[(i, k)] * v;
                if a == C0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigen-decomposition `A = U diag(values) U^*` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are eigenvectors. Absent when only values were requested.
    pub vectors: Option<CMatrix>,
}

fn off_diagonal_mass(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi rotations on a complex Hermitian matrix.
///
/// Each pivot `(p, q)` first removes the phase of `a[p][q]` with a diagonal
/// unitary and then applies a real plane rotation, so the composite
/// `V = diag(1, e^{-i phi}) R` annihilates the pivot. Stops when the
/// off-diagonal Frobenius mass drops below `JACOBI_TOLERANCE * ||A||_F`.
pub fn hermitian_eigen(a: &CMatrix, want_vectors: bool) -> Result<HermitianEigen> {
    let n = a.dim();
    let mut h = a.clone();
    // symmetrize against round-off in the input
    for i in 0..n {
        h[(i, i)] = Complex64::new(h[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            h[(i, j)] = avg;
            h[(j, i)] = avg.conj();
        }
    }
    let mut u = want_vectors.then(|| CMatrix::identity(n));
    let norm = h.frobenius_norm();
    let threshold = JACOBI_TOLERANCE * norm;

    let mut sweeps = 0;
    while off_diagonal_mass(&h) > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNonConvergence { sweeps, dim: n });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let b = h[(p, q)];
                let babs = b.norm();
                if babs <= f64::MIN_POSITIVE || babs < 1e-18 * norm {
                    h[(p, q)] = C0;
                    h[(q, p)] = C0;
                    continue;
                }
                let app = h[(p, p)].re;
                let aqq = h[(q, q)].re;
                let theta = (aqq - app) / (2.0 * babs);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase = b / babs; // e^{i phi}
                let vpp = Complex64::new(c, 0.0);
                let vpq = Complex64::new(s, 0.0);
                let vqp = -phase.conj() * s;
                let vqq = phase.conj() * c;

                // H <- H V
                for k in 0..n {
                    let hp = h[(k, p)];
                    let hq = h[(k, q)];
                    h[(k, p)] = hp * vpp + hq * vqp;
                    h[(k, q)] = hp * vpq + hq * vqq;
                }
                // H <- V^* H
                for k in 0..n {
                    let hp = h[(p, k)];
                    let hq = h[(q, k)];
                    h[(p, k)] = vpp.conj() * hp + vqp.conj() * hq;
                    h[(q, k)] = vpq.conj() * hp + vqq.conj() * hq;
                }
                h[(p, q)] = C0;
                h[(q, p)] = C0;
                h[(p, p)] = Complex64::new(h[(p, p)].re, 0.0);
                h[(q, q)] = Complex64::new(h[(q, q)].re, 0.0);
                if let Some(u) = u.as_mut() {
                    for k in 0..n {
                        let up = u[(k, p)];
                        let uq = u[(k, q)];
                        u[(k, p)] = up * vpp + uq * vqp;
                        u[(k, q)] = up * vpq + uq * vqq;
                    }
                }
            }
        }
    }
    Ok(HermitianEigen { values: (0..n).map(|i| h[(i, i)].re).collect(), vectors: u })
}

pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(a, false)?.values)
}
