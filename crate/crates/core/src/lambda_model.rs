//! Resonant three-level Λ system.
//!
//! Basis order is always `{|e⟩, |0⟩, |1⟩}`; the logical qubit occupies
//! indices 1 and 2. Eigenvectors come from the closed-form parameterization
//! in `(θ, φ)` rather than from a numerical eigensolver, so their gauge is
//! smooth along any control path and the geometric phases are meaningful.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{c, expi, outer, CMatrix, CVector, I, ZERO};
use crate::schedule::Schedule;

pub const IDX_E: usize = 0;
pub const IDX_0: usize = 1;
pub const IDX_1: usize = 2;
pub const BASIS_LABELS: [&str; 3] = ["e", "0", "1"];

/// Instantaneous drive parameters: Rabi amplitude `omega` (rad/s), polar
/// angle `theta` and azimuth `phi` (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlPoint {
    pub omega: f64,
    pub theta: f64,
    pub phi: f64,
}

impl ControlPoint {
    pub fn new(omega: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: format!("Rabi amplitude must be finite and non-negative, got {omega}"),
            });
        }
        check_theta(theta)?;
        if !phi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phi",
                reason: format!("azimuth must be finite, got {phi}"),
            });
        }
        Ok(Self { omega, theta, phi })
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=std::f64::consts::PI + SLACK).contains(&theta) {
        return Err(Error::InvalidParameter {
            name: "theta",
            reason: format!("polar angle must lie in [0, π], got {theta}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EigenLabel {
    Plus,
    Minus,
    Dark,
}

impl EigenLabel {
    pub const ALL: [EigenLabel; 3] = [EigenLabel::Plus, EigenLabel::Minus, EigenLabel::Dark];

    /// Position of the label in eigenbasis-indexed matrices.
    pub fn index(self) -> usize {
        match self {
            EigenLabel::Plus => 0,
            EigenLabel::Minus => 1,
            EigenLabel::Dark => 2,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            EigenLabel::Plus => "+",
            EigenLabel::Minus => "-",
            EigenLabel::Dark => "d",
        }
    }
}

/// Energies `(+Ω, −Ω, 0)` and the matching eigenvectors, ordered as
/// [`EigenLabel::ALL`].
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFrame {
    pub energies: [f64; 3],
    pub vectors: [CVector; 3],
}

impl EigenFrame {
    /// Eigenvectors as the columns of a 3×3 matrix.
    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.vectors)
    }

    pub fn vector(&self, label: EigenLabel) -> &CVector {
        &self.vectors[label.index()]
    }
}

/// `H = Ω sin(θ/2) e^{iφ} |e⟩⟨0| − Ω cos(θ/2) |e⟩⟨1| + h.c.`
pub fn hamiltonian(cp: &ControlPoint) -> CMatrix {
    let (s, co) = ((cp.theta / 2.0).sin(), (cp.theta / 2.0).cos());
    let to_zero = expi(cp.phi) * (cp.omega * s);
    let to_one = c(-cp.omega * co, 0.0);
    let mut h = CMatrix::zeros(3, 3);
    h[(IDX_E, IDX_0)] = to_zero;
    h[(IDX_0, IDX_E)] = to_zero.conj();
    h[(IDX_E, IDX_1)] = to_one;
    h[(IDX_1, IDX_E)] = to_one.conj();
    h
}

/// Closed-form eigenvectors `(|φ+⟩, |φ−⟩, |φd⟩)` at angles `(θ, φ)`.
pub fn frame_vectors(theta: f64, phi: f64) -> [CVector; 3] {
    let (s, co) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    let bright_zero = expi(-phi) * (s * FRAC_1_SQRT_2);
    let bright_one = c(-co * FRAC_1_SQRT_2, 0.0);
    let e = c(FRAC_1_SQRT_2, 0.0);
    let plus = CVector::from_vec(vec![e, bright_zero, bright_one]);
    let minus = CVector::from_vec(vec![-e, bright_zero, bright_one]);
    let dark = CVector::from_vec(vec![ZERO, c(co, 0.0), expi(phi) * s]);
    [plus, minus, dark]
}

/// Time derivatives of [`frame_vectors`] for angular rates `(θ̇, φ̇)`,
/// obtained by differentiating the parameterization analytically.
pub fn frame_derivatives(theta: f64, phi: f64, theta_dot: f64, phi_dot: f64) -> [CVector; 3] {
    let (s, co) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    let s_dot = 0.5 * theta_dot * co;
    let c_dot = -0.5 * theta_dot * s;
    let bright_zero = expi(-phi) * c(s_dot, -phi_dot * s) * FRAC_1_SQRT_2;
    let bright_one = c(-c_dot * FRAC_1_SQRT_2, 0.0);
    let plus = CVector::from_vec(vec![ZERO, bright_zero, bright_one]);
    let minus = plus.clone();
    let dark = CVector::from_vec(vec![ZERO, c(c_dot, 0.0), expi(phi) * c(s_dot, phi_dot * s)]);
    [plus, minus, dark]
}

pub fn eigenframe(cp: &ControlPoint) -> EigenFrame {
    EigenFrame {
        energies: [cp.omega, -cp.omega, 0.0],
        vectors: frame_vectors(cp.theta, cp.phi),
    }
}

/// Nonadiabatic couplings `G_kj = i⟨φ̇_k|φ_j⟩` (k ≠ j) indexed by
/// [`EigenLabel::index`]; the diagonal is zero.
pub fn couplings(theta: f64, phi: f64, theta_dot: f64, phi_dot: f64) -> CMatrix {
    let vecs = frame_vectors(theta, phi);
    let dots = frame_derivatives(theta, phi, theta_dot, phi_dot);
    CMatrix::from_fn(3, 3, |k, j| {
        if k == j {
            ZERO
        } else {
            I * dots[k].dotc(&vecs[j])
        }
    })
}

/// Accumulated phases per eigenlabel (indexed by [`EigenLabel::index`]).
///
/// `alpha` holds the dynamical phases `∫E_n dt` and `gamma` the geometric
/// phases `i∫⟨φ_n|φ̇_n⟩dt`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub alpha: [f64; 3],
    pub gamma: [f64; 3],
}

impl PhaseRecord {
    pub(crate) fn from_totals(area: f64, gamma_plus: f64) -> Self {
        Self {
            alpha: [area, -area, 0.0],
            gamma: [gamma_plus, gamma_plus, -2.0 * gamma_plus],
        }
    }

    pub fn alpha_plus(&self) -> f64 {
        self.alpha[0]
    }

    pub fn gamma_plus(&self) -> f64 {
        self.gamma[0]
    }

    /// Combined phase `−α_n + γ_n` carried by eigenlabel `n`.
    pub fn total(&self, label: EigenLabel) -> f64 {
        -self.alpha[label.index()] + self.gamma[label.index()]
    }
}

/// Phases accumulated from the start of `schedule` up to time `t`, using the
/// closed-form integral over each linear segment.
pub fn accumulate_phases(schedule: &Schedule, t: f64) -> Result<PhaseRecord> {
    let (area, gamma_plus) = schedule.integrals_until(t)?;
    Ok(PhaseRecord::from_totals(area, gamma_plus))
}

/// Holonomic gate on `{|0⟩, |1⟩}` produced by a closed loop that starts at
/// `(theta0, phi0)` and accumulates geometric phase `gamma_plus`.
pub fn holonomy_gate(theta0: f64, phi0: f64, gamma_plus: f64) -> CMatrix {
    let (s2, c2) = ((theta0 / 2.0).sin().powi(2), (theta0 / 2.0).cos().powi(2));
    let bright = expi(gamma_plus);
    let dark = expi(-2.0 * gamma_plus);
    let off = (dark - bright) * (0.5 * theta0.sin());
    CMatrix::from_row_slice(
        2,
        2,
        &[
            bright * s2 + dark * c2,
            off * expi(-phi0),
            off * expi(phi0),
            bright * c2 + dark * s2,
        ],
    )
}

/// Full cyclic evolution operator on `{|e⟩, |0⟩, |1⟩}` when the total pulse
/// area is a multiple of 2π.
pub fn loop_unitary_3level(theta0: f64, phi0: f64, gamma_plus: f64) -> CMatrix {
    let mut u = CMatrix::zeros(3, 3);
    u[(IDX_E, IDX_E)] = expi(gamma_plus);
    u.view_mut((1, 1), (2, 2))
        .copy_from(&holonomy_gate(theta0, phi0, gamma_plus));
    u
}

/// Projector onto the dark state of `(theta, phi)` restricted to the qubit.
pub fn dark_projector_2d(theta: f64, phi: f64) -> CMatrix {
    let d = CVector::from_vec(vec![c((theta / 2.0).cos(), 0.0), expi(phi) * (theta / 2.0).sin()]);
    outer(&d, &d)
}
