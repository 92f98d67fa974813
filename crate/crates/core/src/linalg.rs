//! Dense complex-matrix primitives.
//!
//! Everything else in the crate is written against [`ComplexMatrix`]. The
//! bipartite index convention is fixed globally: the basis vector
//! `|i⟩_A |j⟩_B` sits at row `i * d_b + j`.
//!
//! Eigen- and singular-value kernels delegate to `nalgebra`; the wrappers
//! here add sorting, tolerance checks and the pseudo-inverse conventions.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use thiserror::Error;

pub use nalgebra::Complex;

/// Complex number with `f64` parts.
pub type C64 = Complex<f64>;

/// Maximum entrywise deviation from Hermiticity accepted by [`hermitian_eig`].
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Default relative rank tolerance for support detection.
pub const RANK_TOL: f64 = 1e-10;

/// Eigenvalues below `-NEGATIVE_EIG_TOL * λ_max` are rejected as non-PSD.
pub const NEGATIVE_EIG_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix has a negative eigenvalue {value:e}")]
    NegativeEigenvalue { value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("entry count {found} does not match shape {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, found: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Which tensor factor of a bipartite operator an operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Side {
    A,
    B,
}

/// Dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix {}x{} ", self.rows(), self.cols())?;
        f.debug_list()
            .entries((0..self.rows()).map(|i| {
                (0..self.cols())
                    .map(|j| (self[(i, j)].re, self[(i, j)].im))
                    .collect::<Vec<_>>()
            }))
            .finish()
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch {
                rows,
                cols,
                found: entries.len(),
            });
        }
        let m = Self(DMatrix::from_row_iterator(rows, cols, entries));
        m.check_finite()?;
        Ok(m)
    }

    /// Row-major real entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::from_row_major(rows, cols, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Callers are responsible for producing finite values.
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        let m = Self(DMatrix::from_fn(rows, cols, f));
        debug_assert!(m.check_finite().is_ok());
        m
    }

    /// Wraps an `nalgebra` matrix, rejecting non-finite entries.
    pub fn from_nalgebra(m: DMatrix<C64>) -> Result<Self> {
        let m = Self(m);
        m.check_finite()?;
        Ok(m)
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    fn check_finite(&self) -> Result<()> {
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let z = self[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<C64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows(), self.cols()), (other.rows(), other.cols()));
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |m - m†|`; infinite for non-square input.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// `(m + m†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale(0.5)
    }

    /// Hilbert–Schmidt inner product `tr(self† other)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a.conj() * b).sum()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.0[idx]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Spectral decomposition `m = V diag(values) V†`, values descending.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    /// Rebuilds `V f(Λ) V†`.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let fl: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .filter(|&k| fl[k] != 0.0)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * fl[k])
                .sum()
        })
    }
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let deviation = m.hermiticity_deviation();
    if deviation > HERMITICITY_TOL {
        return Err(LinalgError::NotHermitian { deviation });
    }
    let sym = m.hermitian_part();
    let eig = SymmetricEigen::new(sym.0);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEig { values, vectors })
}

/// Eigenvalues only, descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eig(m)?.values)
}

/// Singular values, descending, `min(rows, cols)` of them.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.0.clone().singular_values().iter().map(|&x| x.max(0.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Thin SVD `m = U diag(sigma) V†` with descending `sigma`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn svd(m: &ComplexMatrix) -> Svd {
    let dec = SVD::new(m.0.clone(), true, true);
    let u = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested V^T");
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let sigma = order.iter().map(|&i| dec.singular_values[i].max(0.0)).collect();
    let u = ComplexMatrix::from_fn(m.rows(), k, |i, j| u[(i, order[j])]);
    let v = ComplexMatrix::from_fn(m.cols(), k, |i, j| v_t[(order[j], i)].conj());
    Svd { u, sigma, v }
}

fn psd_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    let eig = hermitian_eig(m)?;
    let max = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -NEGATIVE_EIG_TOL * max.max(f64::MIN_POSITIVE) {
        return Err(LinalgError::NegativeEigenvalue { value: min });
    }
    Ok(eig)
}

/// Moore–Penrose pseudo-inverse square root of a PSD matrix.
///
/// Eigenvalues above `rank_tol * λ_max` map to `λ^{-1/2}`, the rest to zero.
pub fn psd_pinv_sqrt(m: &ComplexMatrix, rank_tol: f64) -> Result<ComplexMatrix> {
    let eig = psd_eig(m)?;
    let cutoff = rank_tol * eig.values.first().copied().unwrap_or(0.0);
    Ok(eig.map(|x| if x > cutoff && x > 0.0 { x.powf(-0.5) } else { 0.0 }))
}

/// Moore–Penrose pseudo-inverse of a PSD matrix.
pub fn psd_pinv(m: &ComplexMatrix, rank_tol: f64) -> Result<ComplexMatrix> {
    let eig = psd_eig(m)?;
    let cutoff = rank_tol * eig.values.first().copied().unwrap_or(0.0);
    Ok(eig.map(|x| if x > cutoff && x > 0.0 { 1.0 / x } else { 0.0 }))
}

/// Principal square root of a PSD matrix (negative round-off clipped to 0).
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = psd_eig(m)?;
    Ok(eig.map(|x| x.max(0.0).sqrt()))
}

/// Number of eigenvalues above `rank_tol * λ_max`.
pub fn psd_rank(m: &ComplexMatrix, rank_tol: f64) -> Result<usize> {
    let eig = hermitian_eig(m)?;
    let cutoff = rank_tol * eig.values.first().copied().unwrap_or(0.0).max(0.0);
    Ok(eig.values.iter().filter(|&&x| x > cutoff && x > 0.0).count())
}

/// Kronecker product; entry `(i*r_b + k, j*c_b + l)` is `a(i,j) * b(k,l)`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

fn check_bipartite(m: &ComplexMatrix, d_a: usize, d_b: usize) -> Result<()> {
    let n = d_a * d_b;
    if m.rows() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: m.rows(),
        });
    }
    if m.cols() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: m.cols(),
        });
    }
    Ok(())
}

/// Traces out the named side of an operator on `C^{d_a} ⊗ C^{d_b}`.
pub fn partial_trace(m: &ComplexMatrix, d_a: usize, d_b: usize, side: Side) -> Result<ComplexMatrix> {
    check_bipartite(m, d_a, d_b)?;
    Ok(match side {
        Side::B => ComplexMatrix::from_fn(d_a, d_a, |i, k| {
            (0..d_b).map(|j| m[(i * d_b + j, k * d_b + j)]).sum()
        }),
        Side::A => ComplexMatrix::from_fn(d_b, d_b, |j, l| {
            (0..d_a).map(|i| m[(i * d_b + j, i * d_b + l)]).sum()
        }),
    })
}

/// Transposes the named tensor factor.
pub fn partial_transpose(m: &ComplexMatrix, d_a: usize, d_b: usize, side: Side) -> Result<ComplexMatrix> {
    check_bipartite(m, d_a, d_b)?;
    let n = d_a * d_b;
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        let (i, j) = (r / d_b, r % d_b);
        let (k, l) = (c / d_b, c % d_b);
        match side {
            Side::A => m[(k * d_b + j, i * d_b + l)],
            Side::B => m[(i * d_b + l, k * d_b + j)],
        }
    }))
}

/// Realignment `R(i*d_a + i', j*d_b + j') = m(i*d_b + j, i'*d_b + j')`.
///
/// The singular values of `R` are the operator-Schmidt coefficients of `m`
/// under the Hilbert–Schmidt inner product.
pub fn realign(m: &ComplexMatrix, d_a: usize, d_b: usize) -> Result<ComplexMatrix> {
    check_bipartite(m, d_a, d_b)?;
    Ok(ComplexMatrix::from_fn(d_a * d_a, d_b * d_b, |r, c| {
        let (i, ip) = (r / d_a, r % d_a);
        let (j, jp) = (c / d_b, c % d_b);
        m[(i * d_b + j, ip * d_b + jp)]
    }))
}

/// Orthonormalises the columns of a tall matrix (QR with the phases of
/// `diag(R)` absorbed into `Q`, so Ginibre input yields Haar-distributed output).
pub fn orthonormal_columns(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if m.rows() < m.cols() {
        return Err(LinalgError::DimensionMismatch {
            expected: m.cols(),
            found: m.rows(),
        });
    }
    let qr = m.0.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let phases: Vec<C64> = (0..m.cols())
        .map(|k| {
            let d = r[(k, k)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect();
    Ok(ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| q[(i, j)] * phases[j]))
}
