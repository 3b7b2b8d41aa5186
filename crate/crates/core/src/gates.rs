//! Target gates and their holonomy parameters.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

use crate::error::{Error, Result};
use crate::lambda_model::{check_theta, holonomy_gate};
use crate::qmat::{c, ensure_unitary, expi, identity, pauli_x, pauli_y, pauli_z, CMatrix, Tolerances, ZERO};

/// Holonomy parameters of a loop together with the gate they implement.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec {
    pub label: String,
    pub theta0: f64,
    pub phi0: f64,
    pub gamma_plus: f64,
    /// 1 for a gate on `{|0⟩, |1⟩}`, 2 for the controlled form.
    pub qubits: u8,
    /// Reference unitary, 2×2 or 4×4.
    pub target: CMatrix,
    /// `arg Tr(target† · realized)`: the phase by which the closed-form
    /// holonomy differs from `target`.
    pub global_phase: f64,
}

impl GateSpec {
    /// Spec whose target is the holonomy itself.
    pub fn from_parameters(label: &str, theta0: f64, phi0: f64, gamma_plus: f64) -> Result<Self> {
        check_theta(theta0)?;
        let target = holonomy_gate(theta0, phi0, gamma_plus);
        Ok(Self {
            label: label.to_string(),
            theta0,
            phi0,
            gamma_plus,
            qubits: 1,
            target,
            global_phase: 0.0,
        })
    }

    fn with_target(mut self, target: CMatrix) -> Self {
        self.target = target;
        self.global_phase = phase_of_overlap(&self.target, &self.realized());
        self
    }

    /// The controlled version with atom 1 as control.
    pub fn controlled_spec(&self) -> Self {
        let mut out = self.clone();
        out.qubits = 2;
        out.target = controlled(self);
        out.global_phase = 0.0;
        out
    }

    /// Unitary produced by the ideal loop: the holonomy or its controlled form.
    pub fn realized(&self) -> CMatrix {
        if self.qubits == 2 {
            controlled(self)
        } else {
            holonomy_gate(self.theta0, self.phi0, self.gamma_plus)
        }
    }
}

fn phase_of_overlap(target: &CMatrix, realized: &CMatrix) -> f64 {
    (target.adjoint() * realized).trace().arg()
}

pub fn hadamard() -> CMatrix {
    (pauli_x() + pauli_z()).map(|z| z * FRAC_1_SQRT_2)
}

pub fn phase_s() -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]))
}

pub fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (r, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(r, col)] = c(1.0, 0.0);
    }
    m
}

/// `diag(1, 1, 1, e^{iγ})`.
pub fn cphase(gamma: f64) -> CMatrix {
    let mut m = identity(4);
    m[(3, 3)] = expi(gamma);
    m
}

/// The controlled-phase the loop `(0, 0, γ/3)` produces: `CPhase(γ)` times
/// the phase `e^{−2iγ/3}` on the control's `|1⟩` block.
pub fn cphase_with_control_phase(gamma: f64) -> CMatrix {
    let mut m = cphase(gamma);
    let k = expi(-2.0 * gamma / 3.0);
    m[(2, 2)] *= k;
    m[(3, 3)] *= k;
    m
}

/// Labels accepted by [`table1`]; the controlled phase is written
/// `CPHASE(<angle>)`.
pub const TABLE1_LABELS: [&str; 7] = ["X", "Y", "Z", "H", "S", "CNOT", "CPHASE"];

/// Catalogue gate by label. Aliases such as `sx`, `sigma_x` and `σx` map to
/// `X`; the controlled phase takes its angle in parentheses.
pub fn table1(label: &str) -> Result<GateSpec> {
    let key = label.trim().to_uppercase().replace(['_', '-', ' '], "");
    let single = |name: &str, theta0, phi0, gamma_plus, target: CMatrix| -> Result<GateSpec> {
        Ok(GateSpec::from_parameters(name, theta0, phi0, gamma_plus)?.with_target(target))
    };
    match key.as_str() {
        "X" | "SX" | "SIGMAX" | "ΣX" | "PAULIX" => single("X", FRAC_PI_2, 0.0, PI, pauli_x()),
        "Y" | "SY" | "SIGMAY" | "ΣY" | "PAULIY" => single("Y", FRAC_PI_2, FRAC_PI_2, PI, pauli_y()),
        "Z" | "SZ" | "SIGMAZ" | "ΣZ" | "PAULIZ" => single("Z", 0.0, 0.0, PI, pauli_z()),
        "H" | "HADAMARD" => single("H", FRAC_PI_4, 0.0, PI, hadamard()),
        "S" | "PHASE" => single("S", 0.0, 0.0, FRAC_PI_6, phase_s()),
        "CNOT" | "CX" => {
            let base = GateSpec::from_parameters("CNOT", FRAC_PI_2, 0.0, PI)?;
            Ok(base.controlled_spec().with_target(cnot()))
        }
        _ => {
            let angle = key
                .strip_prefix("CPHASE(")
                .or_else(|| key.strip_prefix("CZ("))
                .and_then(|rest| rest.strip_suffix(')'))
                .ok_or_else(|| Error::UnknownGate(label.to_string()))?;
            let gamma = parse_angle(angle).ok_or_else(|| Error::UnknownGate(label.to_string()))?;
            controlled_phase_spec(gamma)
        }
    }
}

/// Controlled phase of angle `gamma`, realized by the loop `(0, 0, γ/3)`.
/// The target carries the loop's local phase on the control's `|1⟩` block,
/// so it matches the holonomy up to a global phase.
pub fn controlled_phase_spec(gamma: f64) -> Result<GateSpec> {
    let base = GateSpec::from_parameters(&format!("CPHASE({gamma})"), 0.0, 0.0, gamma / 3.0)?;
    Ok(base.controlled_spec().with_target(cphase_with_control_phase(gamma)))
}

/// Parses a number, optionally written as a multiple of `pi` (`pi/2`,
/// `0.5pi`, `2*pi`).
pub fn parse_angle(text: &str) -> Option<f64> {
    let t = text.trim().to_ascii_lowercase();
    if let Ok(v) = t.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim().parse::<f64>().ok()?)),
        None => (t.as_str(), None),
    };
    let coeff = num.strip_suffix("pi").or_else(|| num.strip_suffix("π"))?;
    let coeff = coeff.trim().trim_end_matches('*');
    let k = match coeff {
        "" => 1.0,
        "-" => -1.0,
        s => s.parse::<f64>().ok()?,
    };
    Some(k * PI / den.unwrap_or(1.0))
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U_h1` for the holonomy parameters of `spec`.
pub fn controlled(spec: &GateSpec) -> CMatrix {
    let u = holonomy_gate(spec.theta0, spec.phi0, spec.gamma_plus);
    let mut m = CMatrix::from_element(4, 4, ZERO);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m.view_mut((2, 2), (2, 2)).copy_from(&u);
    m
}

/// Holonomy parameters reproducing `target` up to global phase.
///
/// The rotation angle `χ` of `target ∝ exp(−i(χ/2)n̂·σ)` is taken in
/// `[0, π]`, so `γ₊ = χ/3 ∈ [0, π/3]`. A trivial rotation returns `(0, 0, 0)`.
pub fn decompose(target: &CMatrix) -> Result<GateSpec> {
    if target.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: "2x2".into(),
            actual: format!("{}x{}", target.nrows(), target.ncols()),
        });
    }
    ensure_unitary(target, Tolerances::default().unitary)?;
    let det = target.determinant();
    let mut v = target.map(|z| z / det.sqrt());
    if v.trace().re < 0.0 {
        v = -v;
    }
    let a = 0.5 * v.trace().re;
    // V = aI − i(b·σ)  ⇒  b_k = (i/2)·Tr(V σ_k)
    let proj = |p: CMatrix| (c(0.0, 0.5) * (&v * p).trace()).re;
    let (bx, by, bz) = (proj(pauli_x()), proj(pauli_y()), proj(pauli_z()));
    let b = (bx * bx + by * by + bz * bz).sqrt();
    let (theta0, phi0, gamma_plus) = if b < 1e-15 {
        (0.0, 0.0, 0.0)
    } else {
        let chi = 2.0 * b.atan2(a);
        let rho = (bx * bx + by * by).sqrt();
        let phi = if rho > 0.0 { by.atan2(bx) } else { 0.0 };
        (rho.atan2(bz), phi, chi / 3.0)
    };
    Ok(GateSpec::from_parameters("decomposed", theta0, phi0, gamma_plus)?.with_target(target.clone()))
}
