//! Small dense complex linear algebra.
//!
//! Every operator in the crate (Hamiltonians, propagators, transition
//! operators) is a [`CMatrix`]; dimensions stay at 2, 3, 4 or 9, so the
//! matrix exponential is taken through a full Hermitian eigendecomposition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Numeric tolerances shared by the validating operations.
///
/// The Hermiticity check is relative to the largest entry magnitude (floored
/// at 1) so that Hamiltonians expressed in rad/s are judged on the same
/// footing as dimensionless ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermitian: f64,
    pub unitary: f64,
    pub normalization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            unitary: 1e-10,
            normalization: 1e-10,
        }
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn expi(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

/// Computational basis vector `|index⟩` of dimension `dim`.
pub fn basis(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = ONE;
    v
}

/// `|row⟩⟨col|` in dimension `dim`.
pub fn ketbra(dim: usize, row: usize, col: usize) -> CMatrix {
    let mut m = zeros(dim);
    m[(row, col)] = ONE;
    m
}

/// `|a⟩⟨b|`
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise deviation `|M_ij - conj(M_ji)|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn ensure_hermitian(m: &CMatrix, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            actual: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let scale = m.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
    let deviation = hermitian_deviation(m);
    if deviation > tol * scale {
        return Err(Error::NotHermitian {
            deviation,
            tolerance: tol * scale,
        });
    }
    Ok(())
}

/// `‖U†U - I‖_HS`
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    hs_norm(&(u.adjoint() * u - identity(u.ncols())))
}

pub fn ensure_unitary(u: &CMatrix, tol: f64) -> Result<()> {
    if !u.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            actual: format!("{}x{}", u.nrows(), u.ncols()),
        });
    }
    let deviation = unitarity_deviation(u);
    if deviation > tol {
        return Err(Error::NotUnitary {
            deviation,
            tolerance: tol,
        });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending, with the
/// matching orthonormal eigenvectors as columns.
pub fn eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    // Symmetrize so rounding noise cannot leak into the eigensolver.
    let sym = (h + h.adjoint()).map(|z| z * 0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// `exp(-i·H·t)` for Hermitian `H`, validated against the default tolerance.
pub fn expm_skew(h: &CMatrix, t: f64) -> Result<CMatrix> {
    expm_skew_with(h, t, &Tolerances::default())
}

pub fn expm_skew_with(h: &CMatrix, t: f64, tol: &Tolerances) -> Result<CMatrix> {
    ensure_hermitian(h, tol.hermitian)?;
    if !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("time must be finite, got {t}"),
        });
    }
    Ok(expm_skew_unchecked(h, t))
}

/// `exp(-i·H·t)` without validating Hermiticity. Callers guarantee `H = H†`.
pub fn expm_skew_unchecked(h: &CMatrix, t: f64) -> CMatrix {
    let n = h.nrows();
    if t == 0.0 {
        return identity(n);
    }
    let (values, v) = eigh(h);
    let mut scaled = v.clone();
    for (col, lambda) in values.iter().enumerate() {
        let phase = expi(-lambda * t);
        for row in 0..n {
            scaled[(row, col)] *= phase;
        }
    }
    scaled * v.adjoint()
}

/// Largest absolute row sum.
fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(-i·H·t)` by truncated Taylor series when `‖H·t‖_∞ ≤ 0.05`, and by
/// [`expm_skew_unchecked`] otherwise. The series is cut once a term drops
/// below 1e-18, so the result is unitary to rounding.
pub fn expm_skew_fast(h: &CMatrix, t: f64) -> CMatrix {
    let n = h.nrows();
    let norm = inf_norm(h) * t.abs();
    if norm > 0.05 {
        return expm_skew_unchecked(h, t);
    }
    let a = h * C64::new(0.0, -t);
    let mut out = identity(n);
    let mut term = identity(n);
    let mut bound = 1.0;
    for k in 1..=20 {
        term = &term * &a * C64::new(1.0 / k as f64, 0.0);
        out += &term;
        bound *= norm / k as f64;
        if bound < 1e-18 {
            break;
        }
    }
    out
}

/// `AB - BA`
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{} square", a.nrows(), a.nrows()),
            actual: format!("{}x{}", b.nrows(), b.ncols()),
        });
    }
    Ok(a * b - b * a)
}

/// `1 - |Tr(U†V)| / dim`: zero exactly when `V = e^{iα} U`.
pub fn distance_up_to_phase(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", u.nrows(), u.ncols()),
            actual: format!("{}x{}", v.nrows(), v.ncols()),
        });
    }
    let tol = Tolerances::default().unitary;
    ensure_unitary(u, tol)?;
    ensure_unitary(v, tol)?;
    Ok(block_distance(u, v))
}

/// The phase-insensitive distance without unitarity checks; used on
/// projected blocks, which are only approximately unitary.
pub(crate) fn block_distance(u: &CMatrix, v: &CMatrix) -> f64 {
    let overlap = (u.adjoint() * v).trace();
    (1.0 - overlap.norm() / u.nrows() as f64).max(0.0)
}

/// Phase `β` that best aligns `u` to `v` in the sense `v ≈ e^{iβ} u`.
pub fn relative_phase(u: &CMatrix, v: &CMatrix) -> f64 {
    (u.adjoint() * v).trace().arg()
}

pub fn vector_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn ensure_normalized(v: &CVector, tol: f64) -> Result<()> {
    let norm = vector_norm(v);
    if (norm - 1.0).abs() > tol {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}
