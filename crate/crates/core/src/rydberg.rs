//! Two Rydberg atoms driven by bichromatic fields: the nine-level model in
//! the frame rotating with `2Δ` on `|rr⟩`, its second-order effective
//! Hamiltonian, and the mapping onto the Λ controls.
//!
//! Basis order: `00, 01, 0r, 10, 11, 1r, r0, r1, rr` (first label is atom 1).

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::propagate::{Drive, TimeDependence};
use crate::qmat::{commutator, expi, hs_norm, CMatrix};
use crate::schedule::Segment;

pub const LABELS: [&str; 9] = ["00", "01", "0r", "10", "11", "1r", "r0", "r1", "rr"];
pub const IDX_00: usize = 0;
pub const IDX_01: usize = 1;
pub const IDX_0R: usize = 2;
pub const IDX_10: usize = 3;
pub const IDX_11: usize = 4;
pub const IDX_1R: usize = 5;
pub const IDX_R0: usize = 6;
pub const IDX_R1: usize = 7;
pub const IDX_RR: usize = 8;

/// Embedding of the Λ basis `{e, 0, 1}` into the nine-level basis.
pub const LAMBDA_EMBEDDING: [usize; 3] = [IDX_RR, IDX_10, IDX_11];
/// Two-qubit computational states `00, 01, 10, 11`.
pub const COMPUTATIONAL: [usize; 4] = [IDX_00, IDX_01, IDX_10, IDX_11];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RydbergParams {
    pub omega11: C64,
    pub omega20: C64,
    pub omega21: C64,
    /// Detuning `Δ`, rad/s.
    pub delta: f64,
    /// Interaction `V₁₂`, rad/s.
    pub v12: f64,
}

impl RydbergParams {
    /// Drive amplitudes for the effective controls `(Ω_eff, θ, φ)` with
    /// `V₁₂` set by [`v12_condition`].
    pub fn from_controls(omega_eff: f64, theta: f64, phi: f64, delta: f64) -> Result<Self> {
        let (omega11, omega20, omega21) = map_controls(omega_eff, theta, phi, delta)?;
        let mut p = Self {
            omega11,
            omega20,
            omega21,
            delta,
            v12: 0.0,
        };
        p.v12 = v12_condition(&p)?;
        Ok(p)
    }

    fn intensity(&self) -> f64 {
        self.omega11.norm_sqr() + self.omega20.norm_sqr() + self.omega21.norm_sqr()
    }

    /// Amplitudes that break `|Ω| ≤ Δ/10`.
    pub fn validity_warnings(&self) -> Vec<String> {
        [("omega11", self.omega11), ("omega20", self.omega20), ("omega21", self.omega21)]
            .iter()
            .filter(|(_, w)| w.norm() > self.delta.abs() / 10.0)
            .map(|(name, w)| {
                format!(
                    "|{name}| = {:.4e} rad/s exceeds delta/10 = {:.4e} rad/s; the effective model may be inaccurate",
                    w.norm(),
                    self.delta.abs() / 10.0
                )
            })
            .collect()
    }
}

/// `Ω₁₁ = √(Ω_eff Δ/2)`, `Ω₂₀ = Ω₁₁ sin(θ/2) e^{iφ}`, `Ω₂₁ = −Ω₁₁ cos(θ/2)`.
pub fn map_controls(omega_eff: f64, theta: f64, phi: f64, delta: f64) -> Result<(C64, C64, C64)> {
    if !(omega_eff >= 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega_eff/delta",
            reason: format!("need omega_eff >= 0 and delta > 0, got {omega_eff} and {delta}"),
        });
    }
    let o11 = (omega_eff * delta / 2.0).sqrt();
    Ok((
        C64::from(o11),
        expi(phi) * (o11 * (theta / 2.0).sin()),
        C64::from(-o11 * (theta / 2.0).cos()),
    ))
}

/// `V₁₂ = 2Δ − 4(|Ω₁₁|² + |Ω₂₀|² + |Ω₂₁|²)/(3Δ)`.
pub fn v12_condition(p: &RydbergParams) -> Result<f64> {
    if p.delta == 0.0 {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: "detuning must be nonzero".into(),
        });
    }
    Ok(2.0 * p.delta - 4.0 * p.intensity() / (3.0 * p.delta))
}

/// A term `ĥ e^{−iωt} + ĥ† e^{iωt}` of a fast-oscillating Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatingTerm {
    pub h: CMatrix,
    pub omega: f64,
}

fn set(m: &mut CMatrix, row: usize, col: usize, v: C64) {
    m[(row, col)] += v;
}

/// `ĥ₁` and `ĥ₂` with `ω₁ = Δ`, `ω₂ = 3Δ`.
pub fn oscillating_terms(p: &RydbergParams) -> [OscillatingTerm; 2] {
    let mut a = CMatrix::zeros(9, 9);
    set(&mut a, IDX_R0, IDX_10, p.omega11);
    set(&mut a, IDX_R1, IDX_11, p.omega11);
    set(&mut a, IDX_0R, IDX_00, p.omega20);
    set(&mut a, IDX_1R, IDX_10, p.omega20);
    set(&mut a, IDX_0R, IDX_01, p.omega21);
    set(&mut a, IDX_1R, IDX_11, p.omega21);
    let mut b = CMatrix::zeros(9, 9);
    set(&mut b, IDX_1R, IDX_RR, p.omega11.conj());
    set(&mut b, IDX_R0, IDX_RR, p.omega20.conj());
    set(&mut b, IDX_R1, IDX_RR, p.omega21.conj());
    let h1 = &a + a.adjoint() + &b;
    [
        OscillatingTerm { h: h1, omega: p.delta },
        OscillatingTerm { h: b, omega: 3.0 * p.delta },
    ]
}

/// `Σ_n ĥ_n e^{−iω_n t} + h.c. + (V₁₂ − 2Δ)|rr⟩⟨rr|`.
pub fn full_hamiltonian(p: &RydbergParams, t: f64) -> CMatrix {
    let mut h = CMatrix::zeros(9, 9);
    for term in oscillating_terms(p) {
        let rot = term.h.map(|z| z * expi(-term.omega * t));
        h += &rot + rot.adjoint();
    }
    h[(IDX_RR, IDX_RR)] += C64::from(p.v12 - 2.0 * p.delta);
    h
}

/// `H_eff(t) = Σ_{m,n} ½(1/ω_m + 1/ω_n)[ĥ_m†, ĥ_n] e^{i(ω_m−ω_n)t}`, stored
/// as its coefficient matrices.
#[derive(Debug, Clone)]
pub struct JamesHamiltonian {
    /// `(ω_m − ω_n, coefficient)` for every ordered pair.
    parts: Vec<(f64, CMatrix)>,
}

impl JamesHamiltonian {
    pub fn at(&self, t: f64) -> CMatrix {
        let dim = self.parts[0].1.nrows();
        let mut h = CMatrix::zeros(dim, dim);
        for (w, m) in &self.parts {
            h += m.map(|z| z * expi(w * t));
        }
        h
    }

    /// Time-independent (`m = n`) part.
    pub fn secular(&self) -> CMatrix {
        let dim = self.parts[0].1.nrows();
        let mut h = CMatrix::zeros(dim, dim);
        for (w, m) in &self.parts {
            if *w == 0.0 {
                h += m;
            }
        }
        h
    }

    /// Largest HS norm among the oscillating (`m ≠ n`) coefficients.
    pub fn cross_amplitude(&self) -> f64 {
        self.parts
            .iter()
            .filter(|(w, _)| *w != 0.0)
            .map(|(_, m)| hs_norm(m))
            .fold(0.0, f64::max)
    }
}

pub fn james_effective(terms: &[OscillatingTerm]) -> Result<JamesHamiltonian> {
    let Some(first) = terms.first() else {
        return Err(Error::InvalidParameter {
            name: "terms",
            reason: "at least one oscillating term is required".into(),
        });
    };
    for (k, t) in terms.iter().enumerate() {
        if !(t.omega > 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: format!("frequencies must be positive, got {}", t.omega),
            });
        }
        if t.h.shape() != first.h.shape() {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", first.h.nrows(), first.h.ncols()),
                actual: format!("{}x{}", t.h.nrows(), t.h.ncols()),
            });
        }
        if terms[..k].iter().any(|o| o.omega == t.omega) {
            return Err(Error::DuplicateFrequency(t.omega));
        }
    }
    let mut parts = Vec::with_capacity(terms.len() * terms.len());
    for m in terms {
        for n in terms {
            let weight = 0.5 * (1.0 / m.omega + 1.0 / n.omega);
            let coeff = commutator(&m.h.adjoint(), &n.h)? * C64::from(weight);
            parts.push((m.omega - n.omega, coeff));
        }
    }
    Ok(JamesHamiltonian { parts })
}

/// Keeps only entries among the computational states and `|rr⟩`.
pub fn restrict_to_computational(h: &CMatrix) -> CMatrix {
    let keep = |k: usize| COMPUTATIONAL.contains(&k) || k == IDX_RR;
    CMatrix::from_fn(9, 9, |r, c| if keep(r) && keep(c) { h[(r, c)] } else { C64::from(0.0) })
}

/// Closed-form effective Hamiltonian on the nine-level space: the
/// `|rr⟩`-`|10⟩`, `|rr⟩`-`|11⟩` couplings and the `|rr⟩` shift
/// `V₁₂ − 2Δ + 4Σ|Ω|²/(3Δ)`.
pub fn closed_form_effective(p: &RydbergParams) -> CMatrix {
    let mut h = CMatrix::zeros(9, 9);
    let c10 = p.omega11 * p.omega20 * (2.0 / p.delta);
    let c11 = p.omega11 * p.omega21 * (2.0 / p.delta);
    h[(IDX_RR, IDX_10)] = c10;
    h[(IDX_10, IDX_RR)] = c10.conj();
    h[(IDX_RR, IDX_11)] = c11;
    h[(IDX_11, IDX_RR)] = c11.conj();
    h[(IDX_RR, IDX_RR)] = C64::from(p.v12 - 2.0 * p.delta + 4.0 * p.intensity() / (3.0 * p.delta));
    h
}

/// Secular effective Hamiltonian of the full model including the static
/// `(V₁₂ − 2Δ)|rr⟩⟨rr|` term, restricted to computational states and `|rr⟩`.
pub fn secular_effective(p: &RydbergParams) -> Result<CMatrix> {
    let mut h = james_effective(&oscillating_terms(p))?.secular();
    h[(IDX_RR, IDX_RR)] += C64::from(p.v12 - 2.0 * p.delta);
    Ok(restrict_to_computational(&h))
}

/// Λ Hamiltonian on `{|rr⟩, |10⟩, |11⟩}`.
pub fn effective_lambda(p: &RydbergParams) -> CMatrix {
    let full = closed_form_effective(p);
    let mut h = CMatrix::from_fn(3, 3, |r, c| full[(LAMBDA_EMBEDDING[r], LAMBDA_EMBEDDING[c])]);
    h[(0, 0)] = C64::from(0.0);
    h
}

/// How `V₁₂` behaves over the schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum V12Mode {
    /// Follows the drive envelope through [`v12_condition`]; equals `2Δ`
    /// whenever the drive is off.
    Envelope,
    /// Held at the given value throughout.
    Fixed(f64),
}

impl V12Mode {
    /// Fixed `V₁₂` from the condition at effective amplitude `omega_eff`.
    pub fn fixed_at_peak(omega_eff: f64, delta: f64) -> Result<Self> {
        let p = RydbergParams::from_controls(omega_eff, 0.0, 0.0, delta)?;
        Ok(V12Mode::Fixed(p.v12))
    }
}

/// The nine-level model driven by an effective-Λ schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RydbergFullDrive {
    pub delta: f64,
    pub v12: V12Mode,
}

impl RydbergFullDrive {
    pub fn new(delta: f64, v12: V12Mode) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("detuning must be positive, got {delta}"),
            });
        }
        Ok(Self { delta, v12 })
    }

    pub fn params(&self, segment: &Segment, local: f64) -> RydbergParams {
        let cp = segment.control_at(local);
        let (omega11, omega20, omega21) =
            map_controls(cp.omega.max(0.0), cp.theta, cp.phi, self.delta).expect("delta validated at construction");
        let mut p = RydbergParams {
            omega11,
            omega20,
            omega21,
            delta: self.delta,
            v12: 0.0,
        };
        p.v12 = match self.v12 {
            V12Mode::Envelope => v12_condition(&p).expect("delta validated at construction"),
            V12Mode::Fixed(v) => v,
        };
        p
    }
}

impl Drive for RydbergFullDrive {
    fn dim(&self) -> usize {
        9
    }

    fn labels(&self) -> Vec<String> {
        LABELS.iter().map(|s| s.to_string()).collect()
    }

    fn hamiltonian(&self, segment: &Segment, local: f64, t: f64) -> CMatrix {
        full_hamiltonian(&self.params(segment, local), t)
    }

    fn time_dependence(&self, segment: &Segment) -> TimeDependence {
        if segment.omega == 0.0 {
            TimeDependence::Constant
        } else if segment.is_static() {
            TimeDependence::Periodic(TAU / self.delta)
        } else {
            TimeDependence::General
        }
    }

    /// A hundredth of the slowest oscillation period `2π/Δ`.
    fn max_substep(&self) -> Option<f64> {
        Some(TAU / (100.0 * self.delta))
    }
}

/// The effective Λ model with states labelled by their two-atom names.
#[derive(Debug, Clone, Copy, Default)]
pub struct EffectiveDrive;

impl Drive for EffectiveDrive {
    fn dim(&self) -> usize {
        3
    }

    fn labels(&self) -> Vec<String> {
        LAMBDA_EMBEDDING.iter().map(|&k| LABELS[k].to_string()).collect()
    }

    fn hamiltonian(&self, segment: &Segment, local: f64, t: f64) -> CMatrix {
        crate::propagate::LambdaDrive.hamiltonian(segment, local, t)
    }

    fn time_dependence(&self, segment: &Segment) -> TimeDependence {
        crate::propagate::LambdaDrive.time_dependence(segment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda_model::{hamiltonian, ControlPoint};
    use crate::qmat::eigh;

    fn sample() -> RydbergParams {
        let mut p = RydbergParams {
            omega11: C64::from(1.0),
            omega20: C64::from(0.5),
            omega21: C64::from(-0.5),
            delta: 38.0,
            v12: 0.0,
        };
        p.v12 = v12_condition(&p).unwrap();
        p
    }

    #[test]
    fn undriven_hamiltonian_is_rr_shift() {
        let p = RydbergParams {
            omega11: C64::from(0.0),
            omega20: C64::from(0.0),
            omega21: C64::from(0.0),
            delta: 38.0,
            v12: 70.0,
        };
        let h = full_hamiltonian(&p, 0.3);
        let mut expected = CMatrix::zeros(9, 9);
        expected[(IDX_RR, IDX_RR)] = C64::from(70.0 - 76.0);
        assert_eq!(h, expected);
        assert_eq!(v12_condition(&p).unwrap(), 76.0);
    }

    #[test]
    fn hand_assembled_entries_at_zero() {
        let p = sample();
        let h = full_hamiltonian(&p, 0.0);
        // e^{±iΔt} pairs give factor 2 on the lower ladder; |rr⟩ couplings
        // carry e^{iΔt} + e^{3iΔt} → 2 at t = 0
        let expected = [
            (IDX_R0, IDX_10, 2.0),
            (IDX_R1, IDX_11, 2.0),
            (IDX_0R, IDX_00, 1.0),
            (IDX_1R, IDX_10, 1.0),
            (IDX_0R, IDX_01, -1.0),
            (IDX_1R, IDX_11, -1.0),
            (IDX_RR, IDX_1R, 2.0),
            (IDX_RR, IDX_R0, 1.0),
            (IDX_RR, IDX_R1, -1.0),
        ];
        let mut oracle = CMatrix::zeros(9, 9);
        for (r, c, v) in expected {
            oracle[(r, c)] = C64::from(v);
            oracle[(c, r)] = C64::from(v);
        }
        oracle[(IDX_RR, IDX_RR)] = C64::from(p.v12 - 2.0 * p.delta);
        assert!(hs_norm(&(h - oracle)) < 1e-14);
    }

    #[test]
    fn single_term_is_static_commutator() {
        let p = sample();
        let term = oscillating_terms(&p)[1].clone();
        let j = james_effective(std::slice::from_ref(&term)).unwrap();
        let expected = commutator(&term.h.adjoint(), &term.h).unwrap() / C64::from(term.omega);
        assert!(hs_norm(&(j.at(0.7) - &expected)) < 1e-15);
        assert_eq!(j.cross_amplitude(), 0.0);
    }

    #[test]
    fn duplicate_frequencies_rejected() {
        let t = oscillating_terms(&sample())[0].clone();
        assert!(matches!(james_effective(&[t.clone(), t]), Err(Error::DuplicateFrequency(_))));
    }

    #[test]
    fn secular_part_matches_closed_form() {
        let p = sample();
        let d = hs_norm(&(secular_effective(&p).unwrap() - closed_form_effective(&p)));
        assert!(d < 1e-15, "{d}");
        assert!(closed_form_effective(&p)[(IDX_RR, IDX_RR)].norm() < 1e-14);
    }

    #[test]
    fn control_mapping_round_trip() {
        let (oe, th, ph, de) = (2.0, 1.1, 0.4, 76.0);
        let p = RydbergParams::from_controls(oe, th, ph, de).unwrap();
        let lam = hamiltonian(&ControlPoint::new(oe, th, ph).unwrap());
        assert!(hs_norm(&(effective_lambda(&p) - lam)) < 1e-12);
        let (o11, o20, o21) = map_controls(oe, 0.0, 0.3, de).unwrap();
        assert_eq!(o20, C64::from(0.0));
        assert_eq!(o21, -o11);
        // Ω_eff = 2Ω₁₁²/Δ
        assert!((2.0 * o11.norm_sqr() / de - oe).abs() < 1e-12);
    }

    #[test]
    fn effective_lambda_spectrum() {
        let p = RydbergParams::from_controls(3.0, 0.8, 1.2, 60.0).unwrap();
        let (vals, _) = eigh(&effective_lambda(&p));
        for (v, e) in vals.iter().zip([-3.0, 0.0, 3.0]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn strong_drive_warns() {
        let p = RydbergParams::from_controls(10.0, 1.0, 0.0, 38.0).unwrap();
        assert!(!p.validity_warnings().is_empty());
        let weak = RydbergParams::from_controls(2.0 / 38.0, 1.0, 0.0, 38.0).unwrap();
        assert!(weak.validity_warnings().is_empty());
    }
}
