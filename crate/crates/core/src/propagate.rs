//! Time-ordered propagation of a [`Schedule`] under a [`Drive`].
//!
//! Each segment is integrated according to how its Hamiltonian depends on
//! time:
//!
//! * constant: one exact exponential;
//! * periodic with period `T`: the one-period propagator is built from
//!   fourth-order commutator-free Magnus steps and raised to the number of
//!   whole periods, the remainder is stepped directly;
//! * general: exponential-midpoint steps.
//!
//! [`evolve`] repeats the whole propagation with the substep halved until the
//! final unitary moves by less than 1e-7 in Hilbert-Schmidt norm.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lambda_model::{hamiltonian, BASIS_LABELS};
use crate::qmat::{block_distance, ensure_normalized, expm_skew_fast, hs_norm, identity, CMatrix, CVector, Tolerances};
use crate::schedule::{Schedule, Segment};

/// How a drive's Hamiltonian varies inside one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeDependence {
    Constant,
    /// `H(t + period) = H(t)` in absolute time.
    Periodic(f64),
    General,
}

/// Maps the control program to a Hamiltonian in some Hilbert space.
pub trait Drive: Sync {
    fn dim(&self) -> usize;
    fn labels(&self) -> Vec<String>;
    /// Hamiltonian in rad/s at absolute time `t`, which lies `local` seconds
    /// into `segment`.
    fn hamiltonian(&self, segment: &Segment, local: f64, t: f64) -> CMatrix;
    fn time_dependence(&self, segment: &Segment) -> TimeDependence;
    /// Upper limit on the integration substep, if the drive has one.
    fn max_substep(&self) -> Option<f64> {
        None
    }
}

/// The Λ-model Hamiltonian on `{|e⟩, |0⟩, |1⟩}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LambdaDrive;

impl Drive for LambdaDrive {
    fn dim(&self) -> usize {
        3
    }

    fn labels(&self) -> Vec<String> {
        BASIS_LABELS.iter().map(|s| s.to_string()).collect()
    }

    fn hamiltonian(&self, segment: &Segment, local: f64, _t: f64) -> CMatrix {
        hamiltonian(&segment.control_at(local))
    }

    fn time_dependence(&self, segment: &Segment) -> TimeDependence {
        if segment.is_static() || segment.omega == 0.0 {
            TimeDependence::Constant
        } else {
            TimeDependence::General
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub final_unitary: CMatrix,
    /// Final state, when an initial state was given.
    pub final_state: Option<CVector>,
    pub trace: Vec<TraceRow>,
    /// Populations per trace row, in the drive's basis order.
    pub populations: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    /// Substep the result converged at, in seconds.
    pub substep: f64,
    /// `‖U_h − U_{h/2}‖_HS` of the last refinement.
    pub refinement_delta: f64,
}

impl PropagationResult {
    /// CSV with header `t,<labels>,fidelity` and 12 significant digits.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("t");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push_str(",fidelity\n");
        for (row, pops) in self.trace.iter().zip(&self.populations) {
            let _ = write!(out, "{:.11e}", row.t);
            for p in pops {
                let _ = write!(out, ",{:.11e}", p);
            }
            let _ = writeln!(out, ",{:.11e}", row.fidelity);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Starting substep; defaults to the shortest segment over 64.
    pub substep: Option<f64>,
    pub initial: Option<CVector>,
    /// State the fidelity column is measured against; defaults to the
    /// initial state.
    pub reference: Option<CVector>,
    pub trace_rows: usize,
    /// Refinement gate on the final unitary.
    pub tolerance: f64,
    pub max_halvings: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            substep: None,
            initial: None,
            reference: None,
            trace_rows: 512,
            tolerance: 1e-7,
            max_halvings: 8,
        }
    }
}

impl EvolveOptions {
    pub fn from_state(initial: CVector) -> Self {
        Self {
            initial: Some(initial),
            ..Self::default()
        }
    }

    pub fn with_reference(mut self, reference: CVector) -> Self {
        self.reference = Some(reference);
        self
    }
}

/// Propagator over `[a, b]` with `H` constant there.
fn constant_step(drive: &dyn Drive, seg: &Segment, start: f64, a: f64, b: f64) -> CMatrix {
    let mid = 0.5 * (a + b);
    expm_skew_fast(&drive.hamiltonian(seg, mid - start, mid), b - a)
}

fn midpoint_steps(drive: &dyn Drive, seg: &Segment, start: f64, a: f64, b: f64, h: f64) -> CMatrix {
    let n = ((b - a) / h).ceil().max(1.0) as usize;
    let dt = (b - a) / n as f64;
    let mut u = identity(drive.dim());
    for k in 0..n {
        let t = a + (k as f64 + 0.5) * dt;
        u = expm_skew_fast(&drive.hamiltonian(seg, t - start, t), dt) * u;
    }
    u
}

/// One commutator-free fourth-order Magnus step from `t0` to `t0 + dt`.
fn magnus4_step(drive: &dyn Drive, seg: &Segment, start: f64, t0: f64, dt: f64) -> CMatrix {
    let sq3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - sq3 / 6.0, 0.5 + sq3 / 6.0);
    let (w1, w2) = (C64::from((3.0 - 2.0 * sq3) / 12.0), C64::from((3.0 + 2.0 * sq3) / 12.0));
    let (t1, t2) = (t0 + c1 * dt, t0 + c2 * dt);
    let h1 = drive.hamiltonian(seg, t1 - start, t1);
    let h2 = drive.hamiltonian(seg, t2 - start, t2);
    // the later exponential leans on the later node
    let early = &h1 * w2 + &h2 * w1;
    let late = &h1 * w1 + &h2 * w2;
    expm_skew_fast(&late, dt) * expm_skew_fast(&early, dt)
}

/// Fourth-order Magnus steps over `[a, b]`.
fn magnus4_steps(drive: &dyn Drive, seg: &Segment, start: f64, a: f64, b: f64, h: f64) -> CMatrix {
    let n = ((b - a) / h).ceil().max(1.0) as usize;
    let dt = (b - a) / n as f64;
    let mut u = identity(drive.dim());
    for k in 0..n {
        u = magnus4_step(drive, seg, start, a + k as f64 * dt, dt) * u;
    }
    u
}

/// Propagators of a `period`-periodic Hamiltonian from `origin` to any later
/// time in the segment: `U(origin + kT + r) = U(origin + r) · U(origin + T)^k`.
struct PeriodicPropagator<'a> {
    drive: &'a dyn Drive,
    seg: &'a Segment,
    start: f64,
    origin: f64,
    period: f64,
    dt: f64,
    /// `U(origin + j·dt)` for `j = 0..=n`.
    prefix: Vec<CMatrix>,
    /// `U(origin + T)^(2^i)`.
    squares: Vec<CMatrix>,
}

impl<'a> PeriodicPropagator<'a> {
    fn new(drive: &'a dyn Drive, seg: &'a Segment, start: f64, origin: f64, period: f64, h: f64) -> Self {
        let n = (period / h).ceil().max(1.0) as usize;
        let dt = period / n as f64;
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(identity(drive.dim()));
        for j in 0..n {
            let next = magnus4_step(drive, seg, start, origin + j as f64 * dt, dt) * &prefix[j];
            prefix.push(next);
        }
        Self {
            drive,
            seg,
            start,
            origin,
            period,
            dt,
            squares: vec![prefix[n].clone()],
            prefix,
        }
    }

    fn power(&mut self, mut k: u64) -> CMatrix {
        let mut result = identity(self.drive.dim());
        let mut i = 0;
        while k > 0 {
            if i == self.squares.len() {
                let last = &self.squares[i - 1];
                self.squares.push(last * last);
            }
            if k & 1 == 1 {
                result = &self.squares[i] * &result;
            }
            k >>= 1;
            i += 1;
        }
        result
    }

    /// `U(origin → t)`.
    fn to(&mut self, t: f64) -> CMatrix {
        let x = (t - self.origin).max(0.0);
        let k = (x / self.period).floor();
        let r = x - k * self.period;
        let j = ((r / self.dt).floor() as usize).min(self.prefix.len() - 1);
        let rest = r - j as f64 * self.dt;
        let mut partial = self.prefix[j].clone();
        if rest > 0.0 {
            partial = magnus4_step(self.drive, self.seg, self.start, self.origin + j as f64 * self.dt, rest) * partial;
        }
        partial * self.power(k as u64)
    }
}

/// Propagator over `[a, b]` inside segment `seg` (which starts at absolute
/// time `start`), with substep `h`.
fn interval(drive: &dyn Drive, seg: &Segment, start: f64, a: f64, b: f64, h: f64) -> CMatrix {
    if b <= a {
        return identity(drive.dim());
    }
    let h = drive.max_substep().map_or(h, |m| h.min(m));
    match drive.time_dependence(seg) {
        TimeDependence::Constant => constant_step(drive, seg, start, a, b),
        TimeDependence::General => midpoint_steps(drive, seg, start, a, b, h),
        TimeDependence::Periodic(period) => {
            if b - a < 2.0 * period {
                return magnus4_steps(drive, seg, start, a, b, h);
            }
            PeriodicPropagator::new(drive, seg, start, a, period, h).to(b)
        }
    }
}

/// Propagator from `t0` to `t1` with substep `h`.
pub fn propagator_between(schedule: &Schedule, drive: &dyn Drive, t0: f64, t1: f64, h: f64) -> Result<CMatrix> {
    let duration = schedule.duration();
    for t in [t0, t1] {
        if !(t >= 0.0 && t <= duration) {
            return Err(Error::TimeOutOfRange { t, duration });
        }
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter {
            name: "substep",
            reason: format!("must be positive, got {h}"),
        });
    }
    let mut u = identity(drive.dim());
    for (i, seg) in schedule.segments().iter().enumerate() {
        let start = schedule.start_of(i);
        let end = start + seg.duration;
        let (a, b) = (start.max(t0), end.min(t1));
        if seg.duration <= 0.0 || b <= a {
            continue;
        }
        u = interval(drive, seg, start, a, b, h) * u;
    }
    Ok(u)
}

fn default_substep(schedule: &Schedule) -> f64 {
    schedule
        .segments()
        .iter()
        .map(|s| s.duration)
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min)
        / 64.0
}

struct Pass {
    unitary: CMatrix,
    states: Vec<CVector>,
}

/// One full propagation, recording the state at each sample time.
fn single_pass(schedule: &Schedule, drive: &dyn Drive, h: f64, samples: &[f64], initial: Option<&CVector>) -> Pass {
    let dim = drive.dim();
    let mut u = identity(dim);
    let mut states = Vec::new();
    let mut next = 0;
    let record = |u: &CMatrix, states: &mut Vec<CVector>| {
        if let Some(psi) = initial {
            states.push(u * psi);
        }
    };
    while next < samples.len() && samples[next] <= 0.0 {
        record(&u, &mut states);
        next += 1;
    }
    for (i, seg) in schedule.segments().iter().enumerate() {
        if seg.duration <= 0.0 {
            continue;
        }
        let start = schedule.start_of(i);
        let end = start + seg.duration;
        if let TimeDependence::Periodic(period) = drive.time_dependence(seg) {
            let h = drive.max_substep().map_or(h, |m| h.min(m));
            let mut cached = PeriodicPropagator::new(drive, seg, start, start, period, h);
            let before = u.clone();
            while next < samples.len() && samples[next] <= end {
                let at = cached.to(samples[next]) * &before;
                record(&at, &mut states);
                next += 1;
            }
            u = cached.to(end) * before;
            continue;
        }
        let mut cursor = start;
        while next < samples.len() && samples[next] <= end {
            let t = samples[next];
            u = interval(drive, seg, start, cursor, t, h) * u;
            cursor = t;
            record(&u, &mut states);
            next += 1;
        }
        u = interval(drive, seg, start, cursor, end, h) * u;
    }
    while next < samples.len() {
        record(&u, &mut states);
        next += 1;
    }
    Pass { unitary: u, states }
}

fn has_explicit_time_dependence(schedule: &Schedule, drive: &dyn Drive) -> bool {
    schedule
        .segments()
        .iter()
        .any(|s| s.duration > 0.0 && drive.time_dependence(s) != TimeDependence::Constant)
}

/// Evolves the schedule, refining the substep until the final unitary is
/// converged to `options.tolerance`.
pub fn evolve(schedule: &Schedule, drive: &dyn Drive, options: &EvolveOptions) -> Result<PropagationResult> {
    let dim = drive.dim();
    let tol = Tolerances::default();
    if let Some(psi) = &options.initial {
        if psi.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: format!("state of length {dim}"),
                actual: format!("length {}", psi.len()),
            });
        }
        ensure_normalized(psi, tol.normalization)?;
    }
    if let Some(r) = &options.reference {
        if r.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: format!("reference of length {dim}"),
                actual: format!("length {}", r.len()),
            });
        }
        ensure_normalized(r, tol.normalization)?;
    }
    let shortest = schedule
        .segments()
        .iter()
        .map(|s| s.duration)
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let mut h = options.substep.unwrap_or_else(|| default_substep(schedule));
    if let Some(sub) = options.substep {
        if !(sub > 0.0) || sub > shortest {
            return Err(Error::InvalidParameter {
                name: "substep",
                reason: format!("must lie in (0, {shortest}], got {sub}"),
            });
        }
    }
    if !h.is_finite() {
        h = 1.0;
    }

    let duration = schedule.duration();
    let samples: Vec<f64> = if options.initial.is_some() && options.trace_rows > 0 {
        let n = options.trace_rows.max(2);
        (0..n).map(|k| duration * k as f64 / (n - 1) as f64).collect()
    } else {
        Vec::new()
    };

    let mut pass = single_pass(schedule, drive, h, &samples, options.initial.as_ref());
    let mut delta = 0.0;
    if has_explicit_time_dependence(schedule, drive) {
        let mut converged = false;
        for _ in 0..options.max_halvings {
            h *= 0.5;
            let finer = single_pass(schedule, drive, h, &samples, options.initial.as_ref());
            delta = hs_norm(&(&finer.unitary - &pass.unitary));
            pass = finer;
            if delta < options.tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NotConverged {
                delta,
                halvings: options.max_halvings,
            });
        }
    }

    let reference = options.reference.clone().or_else(|| options.initial.clone());
    let mut trace = Vec::with_capacity(samples.len());
    let mut populations = Vec::with_capacity(samples.len());
    for (t, psi) in samples.iter().zip(&pass.states) {
        populations.push(psi.iter().map(|z| z.norm_sqr()).collect());
        let fidelity = reference
            .as_ref()
            .map_or(f64::NAN, |r| r.dotc(psi).norm_sqr());
        trace.push(TraceRow { t: *t, fidelity });
    }
    let final_state = options.initial.as_ref().map(|psi| &pass.unitary * psi);
    Ok(PropagationResult {
        final_unitary: pass.unitary,
        final_state,
        trace,
        populations,
        labels: drive.labels(),
        substep: h,
        refinement_delta: delta,
    })
}

/// Norm slack accepted by [`state_fidelity`]: long propagations compose
/// ~10⁶ exponentials and drift from unit norm by rounding alone.
pub const FIDELITY_NORM_TOLERANCE: f64 = 1e-8;

/// `|⟨a|b⟩|²` for normalized states, clamped to at most 1.
pub fn state_fidelity(a: &CVector, b: &CVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("length {}", a.len()),
            actual: format!("length {}", b.len()),
        });
    }
    let tol = FIDELITY_NORM_TOLERANCE;
    ensure_normalized(a, tol)?;
    ensure_normalized(b, tol)?;
    Ok(a.dotc(b).norm_sqr().min(1.0))
}

/// Gate comparison restricted to a subspace.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GateError {
    /// `1 − |Tr(target† · block)| / d` for the projected block.
    pub error: f64,
    /// `‖(I − P) · realized · P‖_HS`.
    pub leakage: f64,
    pub leakage_threshold: f64,
}

impl GateError {
    pub fn leakage_ok(&self) -> bool {
        self.leakage <= self.leakage_threshold
    }
}

pub const DEFAULT_LEAKAGE_THRESHOLD: f64 = 1e-2;

/// Compares `realized` on the basis states `subspace` against `target`.
pub fn gate_error(realized: &CMatrix, target: &CMatrix, subspace: &[usize]) -> Result<GateError> {
    let n = realized.nrows();
    let d = subspace.len();
    if target.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: format!("{d}x{d} target"),
            actual: format!("{}x{}", target.nrows(), target.ncols()),
        });
    }
    if let Some(&bad) = subspace.iter().find(|&&k| k >= n) {
        return Err(Error::InvalidParameter {
            name: "subspace",
            reason: format!("index {bad} out of range for dimension {n}"),
        });
    }
    let block = CMatrix::from_fn(d, d, |r, c| realized[(subspace[r], subspace[c])]);
    let mut leak_sq = 0.0;
    for &col in subspace {
        for row in (0..n).filter(|r| !subspace.contains(r)) {
            leak_sq += realized[(row, col)].norm_sqr();
        }
    }
    Ok(GateError {
        error: block_distance(target, &block),
        leakage: leak_sq.sqrt(),
        leakage_threshold: DEFAULT_LEAKAGE_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda_model::{IDX_1, IDX_E};
    use crate::qmat::basis;
    use crate::schedule::{DriveMode, Segment};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn rabi_pi_pulse_transfers_population() {
        // θ = 0 couples |1⟩ and |e⟩ with Rabi frequency 2Ω, so a Rabi
        // area of π needs ∫Ω = π/2
        let s = Schedule::new(vec![Segment::pulse(PI / 10.0, 5.0, 0.0, 0.0, 1)], DriveMode::Burst);
        let r = evolve(&s, &LambdaDrive, &EvolveOptions::from_state(basis(3, IDX_1))).unwrap();
        let psi = r.final_state.unwrap();
        assert!((psi[IDX_E].norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(r.trace.len(), 512);
        let pops = r.populations.last().unwrap();
        assert!((pops[IDX_E] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let a = basis(2, 0);
        let b = CVector::from_vec(vec![C64::from(FRAC_1_SQRT_2), C64::from(FRAC_1_SQRT_2)]);
        assert!((state_fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(state_fidelity(&a, &basis(2, 1)).unwrap(), 0.0);
        assert!((state_fidelity(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        let bad = CVector::from_vec(vec![C64::from(2.0), C64::from(0.0)]);
        assert!(matches!(state_fidelity(&a, &bad), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn gate_error_examples() {
        let u = crate::qmat::pauli_x();
        let phased = u.map(|z| z * crate::qmat::expi(0.7));
        let e = gate_error(&phased, &u, &[0, 1]).unwrap();
        assert!(e.error < 1e-15 && e.leakage == 0.0);
        assert!(gate_error(&u, &u, &[0, 5]).is_err());
    }

    #[test]
    fn csv_header_and_format() {
        let s = Schedule::new(vec![Segment::pulse(1.0, 0.5, 0.3, 0.0, 1)], DriveMode::Burst);
        let opts = EvolveOptions {
            trace_rows: 3,
            ..EvolveOptions::from_state(basis(3, 1))
        };
        let csv = evolve(&s, &LambdaDrive, &opts).unwrap().trace_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,e,0,1,fidelity"));
        assert_eq!(lines.next().unwrap().split(',').next(), Some("0.00000000000e0"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn oversized_substep_is_rejected() {
        let s = Schedule::new(vec![Segment::pulse(1.0, 0.5, 0.3, 0.0, 1)], DriveMode::Burst);
        let opts = EvolveOptions {
            substep: Some(2.0),
            ..EvolveOptions::default()
        };
        assert!(evolve(&s, &LambdaDrive, &opts).is_err());
    }
}
