//! Adiabatic frame, transition operator and nonadiabatic integrals.
//!
//! All matrices returned here that carry eigen-indices use the order of
//! [`EigenLabel::ALL`] and live in the basis `{|φ_n(0)⟩}` of the initial
//! eigenframe, unless their name says `lab`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lambda_model::{couplings, frame_vectors, EigenLabel, PhaseRecord};
use crate::qmat::{expi, expm_skew_unchecked, hs_norm, identity, outer, CMatrix};
use crate::schedule::Schedule;

/// Abstract π-pulse: from `time` on, the factor `P_kj` of every listed
/// pair (and its mirror) carries an extra sign.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipEvent {
    pub time: f64,
    pub pairs: Vec<(EigenLabel, EigenLabel)>,
}

/// Initial eigenvectors as matrix columns.
pub fn initial_frame(schedule: &Schedule) -> CMatrix {
    let cp = schedule.initial_control().unwrap_or_default();
    CMatrix::from_columns(&frame_vectors(cp.theta, cp.phi))
}

/// `U_A(t) = Σ_n e^{−iα_n + iγ_n} |φ_n(t)⟩⟨φ_n(0)|` in the lab basis.
pub fn adiabatic_operator(schedule: &Schedule, t: f64) -> Result<CMatrix> {
    if schedule.segments().is_empty() {
        return Err(Error::TimeOutOfRange { t, duration: 0.0 });
    }
    let (area, gamma) = schedule.integrals_until(t)?;
    let record = PhaseRecord::from_totals(area, gamma);
    let now = if t >= schedule.duration() {
        schedule.final_control().unwrap_or_default()
    } else {
        schedule.control_at(t)?
    };
    let start = schedule.initial_control().unwrap_or_default();
    let v_t = frame_vectors(now.theta, now.phi);
    let v_0 = frame_vectors(start.theta, start.phi);
    let mut u = CMatrix::zeros(3, 3);
    for label in EigenLabel::ALL {
        let n = label.index();
        u += outer(&v_t[n], &v_0[n]) * expi(record.total(label));
    }
    Ok(u)
}

/// `P_kj` from accumulated phases, with `α` scaled by `alpha_scale`.
fn phase_factors(area: f64, gamma_plus: f64, alpha_scale: f64) -> CMatrix {
    let r = PhaseRecord::from_totals(area * alpha_scale, gamma_plus);
    CMatrix::from_fn(3, 3, |k, j| expi(r.alpha[k] - r.alpha[j] + r.gamma[j] - r.gamma[k]))
}

/// `G_kj` of segment `index` at local time `local`, in rad/s.
fn segment_couplings(schedule: &Schedule, index: usize, local: f64) -> CMatrix {
    let seg = &schedule.segments()[index];
    let cp = seg.control_at(local);
    couplings(cp.theta, cp.phi, seg.theta_rate(), seg.phi_rate())
}

/// `H_T` of segment `index` at local time `local` in rad/s.
fn segment_h_t(schedule: &Schedule, index: usize, local: f64) -> CMatrix {
    let seg = &schedule.segments()[index];
    if seg.is_static() {
        return CMatrix::zeros(3, 3);
    }
    let g = segment_couplings(schedule, index, local);
    let (area, gamma) = schedule.segment_integrals(index, local);
    g.component_mul(&phase_factors(area, gamma, 1.0))
}

/// Transition Hamiltonian at real time `t`, in rad/s.
pub fn transition_hamiltonian_at(schedule: &Schedule, t: f64) -> Result<CMatrix> {
    if schedule.segments().is_empty() {
        return Err(Error::TimeOutOfRange { t, duration: 0.0 });
    }
    let (i, local) = schedule.locate(t)?;
    Ok(segment_h_t(schedule, i, local))
}

/// Point `s·D` of the original schedule (duration `D`) with scaled-time
/// factors for the same shape stretched to `tau`.
fn scaled_point(schedule: &Schedule, s: f64, tau: f64) -> Result<(usize, f64, f64, f64)> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: format!("scaled time {s} outside [0, 1]"),
        });
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("total time must be positive, got {tau}"),
        });
    }
    let d = schedule.duration();
    if schedule.segments().is_empty() || d <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "schedule",
            reason: "schedule has zero duration".into(),
        });
    }
    let (i, local) = schedule.locate(s * d)?;
    Ok((i, local, d, tau / d))
}

/// Transition Hamiltonian per unit scaled time `s = t/τ` when the shape of
/// `schedule` is stretched to total time `tau`.
pub fn transition_hamiltonian(schedule: &Schedule, s: f64, tau: f64) -> Result<CMatrix> {
    let f = pg_decompose(schedule, s, tau)?;
    Ok(f.p.component_mul(&f.g))
}

/// Phase factors and couplings whose entrywise product is `H_T(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PGFactors {
    /// `P_kj = e^{iτ(α_k−α_j) + i(γ_j−γ_k)}`, unit modulus.
    pub p: CMatrix,
    /// `G_kj = i⟨φ̇_k|φ_j⟩` per unit `s`.
    pub g: CMatrix,
}

pub fn pg_decompose(schedule: &Schedule, s: f64, tau: f64) -> Result<PGFactors> {
    let (i, local, d, k) = scaled_point(schedule, s, tau)?;
    let (area, gamma) = schedule.segment_integrals(i, local);
    let g = if schedule.segments()[i].is_static() {
        CMatrix::zeros(3, 3)
    } else {
        segment_couplings(schedule, i, local) * C64::from(d)
    };
    Ok(PGFactors {
        p: phase_factors(area, gamma, k),
        g,
    })
}

/// Sampled `H_T(s)` and the running integrals `F(s) = ∫₀ˢ H_T ds'`.
#[derive(Debug, Clone)]
pub struct TransitionReport {
    pub tau: f64,
    pub s: Vec<f64>,
    /// `H_T` per unit `s` at each grid point.
    pub h_t: Vec<CMatrix>,
    pub f: Vec<CMatrix>,
    /// `max_s ‖F(s)‖_HS`.
    pub max_f_norm: f64,
    /// Quadrature density the result converged at.
    pub points_per_unit_s: usize,
}

impl TransitionReport {
    /// Series `F_kj(s)` on the grid.
    pub fn f_entry(&self, k: EigenLabel, j: EigenLabel) -> Vec<C64> {
        self.f.iter().map(|m| m[(k.index(), j.index())]).collect()
    }

    pub fn max_h_norm(&self) -> f64 {
        self.h_t.iter().map(hs_norm).fold(0.0, f64::max)
    }
}

pub const DEFAULT_POINTS_PER_UNIT_S: usize = 2000;
const RICHARDSON_RTOL: f64 = 1e-6;
const MAX_DOUBLINGS: usize = 12;

struct Piece {
    index: usize,
    start: f64,
    len: f64,
    trivial: bool,
}

struct Grid {
    t: Vec<f64>,
    h: Vec<CMatrix>,
    f: Vec<CMatrix>,
    max_f: f64,
}

/// Cumulative composite Simpson over `pieces`, with about `density` cells
/// per unit of the integration variable. Grid points sit on cell edges.
fn simpson_pass(pieces: &[Piece], density: f64, dim: usize, eval: &dyn Fn(usize, f64) -> CMatrix) -> Grid {
    let mut grid = Grid {
        t: vec![pieces.first().map_or(0.0, |p| p.start)],
        h: Vec::new(),
        f: vec![CMatrix::zeros(dim, dim)],
        max_f: 0.0,
    };
    let first_h = pieces
        .first()
        .map_or_else(|| CMatrix::zeros(dim, dim), |p| eval(p.index, 0.0));
    grid.h.push(first_h);
    for p in pieces {
        let cells = if p.trivial { 1 } else { ((p.len * density).ceil() as usize).max(2) };
        let h = p.len / cells as f64;
        let mut left = eval(p.index, 0.0);
        let mut acc = grid.f.last().unwrap().clone();
        for cell in 0..cells {
            let a = cell as f64 * h;
            let mid = eval(p.index, a + 0.5 * h);
            let right = eval(p.index, if cell + 1 == cells { p.len } else { a + h });
            acc += (&left + mid * C64::from(4.0) + &right) * C64::from(h / 6.0);
            grid.max_f = grid.max_f.max(hs_norm(&acc));
            grid.t.push(p.start + a + h);
            grid.f.push(acc.clone());
            grid.h.push(right.clone());
            left = right;
        }
    }
    grid
}

fn converge(pieces: &[Piece], span: f64, dim: usize, eval: &dyn Fn(usize, f64) -> CMatrix) -> Result<(Grid, usize)> {
    let mut ppu = DEFAULT_POINTS_PER_UNIT_S;
    let mut coarse = simpson_pass(pieces, ppu as f64 / span, dim, eval);
    for _ in 0..MAX_DOUBLINGS {
        ppu *= 2;
        let fine = simpson_pass(pieces, ppu as f64 / span, dim, eval);
        let delta = (fine.max_f - coarse.max_f).abs();
        if delta <= RICHARDSON_RTOL * fine.max_f || fine.max_f == 0.0 {
            return Ok((fine, ppu));
        }
        coarse = fine;
    }
    Err(Error::NotConverged {
        delta: coarse.max_f,
        halvings: MAX_DOUBLINGS,
    })
}

/// Computes `F(s)` for the shape of `schedule` stretched to total time
/// `tau`, doubling the quadrature density from 2000 points per unit `s`
/// until `max‖F‖` changes by less than 1e-6 relative.
pub fn f_integral(schedule: &Schedule, tau: f64) -> Result<TransitionReport> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("total time must be positive, got {tau}"),
        });
    }
    let scaled = schedule.rescaled(tau)?;
    let pieces: Vec<Piece> = scaled
        .segments()
        .iter()
        .enumerate()
        .filter(|(_, seg)| seg.duration > 0.0)
        .map(|(i, seg)| Piece {
            index: i,
            start: scaled.start_of(i) / tau,
            len: seg.duration / tau,
            trivial: seg.is_static(),
        })
        .collect();
    // integration variable is s = t/τ, so H_T picks up a factor τ
    let eval = |i: usize, local: f64| segment_h_t(&scaled, i, local * tau) * C64::from(tau);
    let (grid, ppu) = converge(&pieces, 1.0, 3, &eval)?;
    Ok(TransitionReport {
        tau,
        s: grid.t,
        h_t: grid.h,
        f: grid.f,
        max_f_norm: grid.max_f,
        points_per_unit_s: ppu,
    })
}

/// `max_s |∫₀ˢ e^{i x s'} ds'|` by the same quadrature as [`f_integral`];
/// the analytic value is `2/x` for `x ≥ π`.
pub fn phase_integral_max(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter {
            name: "x",
            reason: "phase rate must be finite".into(),
        });
    }
    let pieces = [Piece {
        index: 0,
        start: 0.0,
        len: 1.0,
        trivial: x == 0.0,
    }];
    let eval = |_: usize, s: f64| CMatrix::from_element(1, 1, expi(x * s));
    Ok(converge(&pieces, 1.0, 1, &eval)?.0.max_f)
}

/// `max_s [‖F(s)‖ + ∫₀ˢ ‖H_T‖‖F‖ ds']`, an upper bound on `‖U_T(s) − I‖_HS`
/// obtained by one integration by parts.
pub fn dyson_bound(report: &TransitionReport) -> f64 {
    let mut integral = 0.0;
    let mut best: f64 = 0.0;
    let mut prev = 0.0;
    for (k, (h, f)) in report.h_t.iter().zip(&report.f).enumerate() {
        let fnorm = hs_norm(f);
        let g = hs_norm(h) * fnorm;
        if k > 0 {
            integral += 0.5 * (g + prev) * (report.s[k] - report.s[k - 1]);
        }
        prev = g;
        best = best.max(fnorm + integral);
    }
    best
}

fn sign_matrix(pairs: &[(EigenLabel, EigenLabel)], signs: &mut [[f64; 3]; 3]) {
    for &(a, b) in pairs {
        signs[a.index()][b.index()] *= -1.0;
        signs[b.index()][a.index()] *= -1.0;
    }
}

fn signed(h: CMatrix, signs: &[[f64; 3]; 3]) -> CMatrix {
    CMatrix::from_fn(3, 3, |k, j| h[(k, j)] * signs[k][j])
}

const CONSTANT_RTOL: f64 = 1e-14;
const MAGNUS_TOL: f64 = 1e-12;
/// Changes below this are accepted once doubling stops paying off, which
/// happens when accumulated round-off over ~1e5 steps reaches ~1e-11.
const MAGNUS_FLOOR_TOL: f64 = 1e-10;
const MAX_MAGNUS_DOUBLINGS: usize = 14;

/// Propagator of `i U' = H(t) U` over `[a, b]`: one exact exponential when
/// `H` is constant on the interval, otherwise fourth-order commutator-free
/// Magnus steps with doubling until successive results agree to 1e-12, or
/// to 1e-10 once the change has stopped shrinking.
fn propagate_interval(a: f64, b: f64, h: &dyn Fn(f64) -> CMatrix) -> Result<CMatrix> {
    let len = b - a;
    let (ha, hm, hb) = (h(a), h(0.5 * (a + b)), h(b));
    let scale = hs_norm(&hm).max(hs_norm(&ha)).max(hs_norm(&hb));
    if scale == 0.0 {
        return Ok(identity(3));
    }
    if hs_norm(&(&ha - &hm)) <= CONSTANT_RTOL * scale && hs_norm(&(&hb - &hm)) <= CONSTANT_RTOL * scale {
        return Ok(expm_skew_unchecked(&hm, len));
    }
    let sq3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - sq3 / 6.0, 0.5 + sq3 / 6.0);
    let (w1, w2) = ((3.0 - 2.0 * sq3) / 12.0, (3.0 + 2.0 * sq3) / 12.0);
    let run = |steps: usize| {
        let dt = len / steps as f64;
        let mut u = identity(3);
        for n in 0..steps {
            let t0 = a + n as f64 * dt;
            let h1 = h(t0 + c1 * dt);
            let h2 = h(t0 + c2 * dt);
            let early = &h1 * C64::from(w2) + &h2 * C64::from(w1);
            let late = &h1 * C64::from(w1) + &h2 * C64::from(w2);
            u = expm_skew_unchecked(&late, dt) * expm_skew_unchecked(&early, dt) * u;
        }
        u
    };
    let mut steps = 8;
    let mut prev = run(steps);
    let mut delta = f64::INFINITY;
    for _ in 0..MAX_MAGNUS_DOUBLINGS {
        steps *= 2;
        let next = run(steps);
        let last = delta;
        delta = hs_norm(&(&next - &prev));
        if delta < MAGNUS_TOL || (delta < MAGNUS_FLOOR_TOL && delta > 0.25 * last) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NotConverged {
        delta,
        halvings: MAX_MAGNUS_DOUBLINGS,
    })
}

/// `U_T(t)` in the initial eigenbasis, with the sign flips of `flips`
/// applied on top of the phase factors the schedule itself produces.
/// Pass no flips for the physical transition operator.
pub fn transition_operator_until(schedule: &Schedule, flips: &[FlipEvent], t: f64) -> Result<CMatrix> {
    let duration = schedule.duration();
    if !(t >= 0.0 && t <= duration) {
        return Err(Error::TimeOutOfRange { t, duration });
    }
    for (k, f) in flips.iter().enumerate() {
        if !(f.time >= 0.0 && f.time <= duration) {
            return Err(Error::TimeOutOfRange { t: f.time, duration });
        }
        if k > 0 && f.time < flips[k - 1].time {
            return Err(Error::InvalidParameter {
                name: "flips",
                reason: "flip events must be sorted by time".into(),
            });
        }
    }
    let mut signs = [[1.0; 3]; 3];
    let mut next_flip = 0;
    let mut u = identity(3);
    for (i, seg) in schedule.segments().iter().enumerate() {
        let start = schedule.start_of(i);
        if seg.duration <= 0.0 || start >= t {
            continue;
        }
        let end = (start + seg.duration).min(t);
        let mut cuts = vec![start];
        while next_flip < flips.len() && flips[next_flip].time <= start {
            sign_matrix(&flips[next_flip].pairs, &mut signs);
            next_flip += 1;
        }
        let mut pending = Vec::new();
        let mut k = next_flip;
        while k < flips.len() && flips[k].time < end {
            cuts.push(flips[k].time);
            pending.push(k);
            k += 1;
        }
        cuts.push(end);
        for w in 0..cuts.len() - 1 {
            if w > 0 {
                sign_matrix(&flips[pending[w - 1]].pairs, &mut signs);
                next_flip = pending[w - 1] + 1;
            }
            let (a, b) = (cuts[w], cuts[w + 1]);
            if b <= a || seg.is_static() {
                continue;
            }
            let sg = signs;
            let h = |tt: f64| signed(segment_h_t(schedule, i, tt - start), &sg);
            u = propagate_interval(a, b, &h)? * u;
        }
    }
    Ok(u)
}

/// `U_T` over the whole schedule in the initial eigenbasis.
pub fn transition_operator(schedule: &Schedule, flips: &[FlipEvent]) -> Result<CMatrix> {
    transition_operator_until(schedule, flips, schedule.duration())
}

/// `U_T(t)` rotated into the lab basis, so that `U = U_A · U_T`.
pub fn transition_operator_lab(schedule: &Schedule, flips: &[FlipEvent], t: f64) -> Result<CMatrix> {
    let v0 = initial_frame(schedule);
    Ok(&v0 * transition_operator_until(schedule, flips, t)? * v0.adjoint())
}

/// Largest diagonal magnitude of `h_t`; zero by construction.
pub fn diagonal_magnitude(h_t: &CMatrix) -> f64 {
    (0..h_t.nrows()).map(|k| h_t[(k, k)].norm()).fold(0.0, f64::max)
}
