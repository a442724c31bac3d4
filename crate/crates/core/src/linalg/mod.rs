//! Dense complex linear algebra.
//!
//! Everything here works on small row-major matrices (dimension up to a few
//! hundred). The eigensolver is cyclic Jacobi, the SVD is one-sided Jacobi,
//! and the propagators use the midpoint exponential scheme.

mod eigen;
mod propagator;
mod svd;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::cplx::{C64, ONE, ZERO};
use crate::error::{Result, SpecError};

pub use eigen::{eigh, hermitian_function, spectral_projector, EigenSystem, Interval};
pub use propagator::{
    default_steps, propagate_resolvent_pair, propagate_unitary, Generator, PropagatorPair, PROP_TOL,
};
pub use svd::{
    kernel_basis, kernel_basis_scaled, require_separated, singular_values, NullSpace, GAP_RATIO_MIN,
};

/// Relative tolerance of the Jacobi eigensolver.
pub const EIG_TOL: f64 = 1e-12;
/// Default hermiticity tolerance for [`HermitianBlock`].
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Default relative rank threshold on singular values.
pub const RANK_TOL: f64 = 1e-8;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    #[serde(with = "crate::cplx::vec")]
    data: Vec<C64>,
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = SpecError;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        ComplexMatrix::new(r.rows, r.cols, r.data)
    }
}

impl From<ComplexMatrix> for MatrixRepr {
    fn from(m: ComplexMatrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(SpecError::invalid(format!(
                "matrix data has {} entries, expected {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(
            n,
            n,
            |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO },
        )
    }

    /// Build from real row slices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    /// Matrix whose columns are the given vectors (each of length `rows`).
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// Horizontal concatenation.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }

    pub fn block_diag(blocks: &[&ComplexMatrix]) -> Self {
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(r, c);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    m[(r0 + i, c0 + j)] = b[(i, j)];
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator 2-norm (largest singular value).
    pub fn norm_spectral(&self) -> f64 {
        singular_values(self).first().copied().unwrap_or(0.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M - M*|` over entries.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut r: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    /// `max |U*U - I|`.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.rows))
    }

    /// Exact Hermitian part `(M + M*)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Matrix-vector product.
pub fn mat_vec(m: &ComplexMatrix, v: &[C64]) -> Vec<C64> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// Self-adjoint matrix with a lazily cached eigendecomposition.
///
/// Construction symmetrizes the input exactly, so every downstream
/// computation sees a bit-exact Hermitian matrix.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct HermitianBlock {
    matrix: ComplexMatrix,
    spectrum: OnceLock<EigenSystem>,
}

impl fmt::Debug for HermitianBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HermitianBlock({:?})", self.matrix)
    }
}

impl PartialEq for HermitianBlock {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl TryFrom<ComplexMatrix> for HermitianBlock {
    type Error = SpecError;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        HermitianBlock::new(m)
    }
}

impl From<HermitianBlock> for ComplexMatrix {
    fn from(b: HermitianBlock) -> Self {
        b.matrix
    }
}

impl HermitianBlock {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, HERMITICITY_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(SpecError::invalid(format!(
                "Hermitian block must be square and non-empty, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if matrix
            .data()
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(SpecError::invalid("matrix has non-finite entries"));
        }
        let residual = matrix.hermiticity_residual();
        if residual > tol * matrix.norm_max().max(1.0) {
            return Err(SpecError::invalid(format!(
                "matrix is not Hermitian (residual {residual:e})"
            )));
        }
        Ok(HermitianBlock {
            matrix: matrix.hermitian_part(),
            spectrum: OnceLock::new(),
        })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        HermitianBlock::new(ComplexMatrix::from_real_diag(diag)).expect("diagonal is Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eigen(&self) -> &EigenSystem {
        self.spectrum.get_or_init(|| eigen::jacobi(&self.matrix))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen().values
    }

    /// Spectral norm, i.e. the largest eigenvalue modulus.
    pub fn norm(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    /// `(1-w)·self + w·other`; exact copies at `w = 0` and `w = 1`.
    pub fn lerp(&self, other: &Self, w: f64) -> Self {
        if w == 0.0 {
            return self.clone();
        }
        if w == 1.0 {
            return other.clone();
        }
        let m = &self.matrix.scale_real(1.0 - w) + &other.matrix.scale_real(w);
        HermitianBlock {
            matrix: m.hermitian_part(),
            spectrum: OnceLock::new(),
        }
    }

    /// `W* M W` for a matrix `W` with orthonormal columns.
    pub fn compress(&self, basis: &ComplexMatrix) -> Result<Self> {
        let m = &(&basis.adjoint() * &self.matrix) * basis;
        HermitianBlock::with_tolerance(m, 1e-9)
    }

    /// `A M A*` for any conformable matrix `A`.
    pub fn conjugate_by(&self, a: &ComplexMatrix) -> Result<Self> {
        let m = &(a * &self.matrix) * &a.adjoint();
        HermitianBlock::with_tolerance(m, 1e-9)
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let m = ComplexMatrix::block_diag(&[&self.matrix, &other.matrix]);
        HermitianBlock {
            matrix: m,
            spectrum: OnceLock::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_invariant_is_enforced() {
        assert!(ComplexMatrix::new(2, 2, vec![ZERO; 3]).is_err());
        assert!(ComplexMatrix::new(2, 3, vec![ZERO; 6]).is_ok());
    }

    #[test]
    fn rejects_non_hermitian_block() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(
            HermitianBlock::new(m),
            Err(SpecError::InvalidInput(_))
        ));
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = ComplexMatrix::from_fn(2, 3, |i, j| C64::new(i as f64 + 0.1, j as f64 / 3.0));
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with("{\"rows\":2,\"cols\":3,\"data\":[["));
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn lerp_endpoints_are_exact() {
        let a = HermitianBlock::from_real_diag(&[0.1, 0.7]);
        let b = HermitianBlock::from_real_diag(&[1.0 / 3.0, -2.0]);
        assert_eq!(a.lerp(&b, 0.0), a);
        assert_eq!(a.lerp(&b, 1.0), b);
    }
}
