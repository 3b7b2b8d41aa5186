#![allow(dead_code)]

use holonomic::qmat::{c, expm_skew, CMatrix, CVector};
use proptest::prelude::*;

pub fn hermitian_from(n: usize, entries: &[f64]) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |r, k| c(entries[2 * (r * n + k)], entries[2 * (r * n + k) + 1]));
    (&a + a.adjoint()).map(|z| z * 0.5)
}

/// Hermitian `n×n` matrices with entries in `[-1, 1]`.
pub fn hermitian(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |v| hermitian_from(n, &v))
}

/// Unitaries `exp(−iH)` for `H` drawn from [`hermitian`] scaled by 4.
pub fn unitary(n: usize) -> impl Strategy<Value = CMatrix> {
    hermitian(n).prop_map(|h| expm_skew(&h, 4.0).unwrap())
}

/// Unit vectors of length `n`.
pub fn state(n: usize) -> impl Strategy<Value = CVector> {
    prop::collection::vec(-1.0f64..1.0, 2 * n)
        .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(move |v| {
            let s = CVector::from_fn(n, |k, _| c(v[2 * k], v[2 * k + 1]));
            let norm = s.norm();
            s / c(norm, 0.0)
        })
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
