//! Control programs for the geodesic holonomic loop.
//!
//! A [`Schedule`] is an ordered list of [`Segment`]s. In the default burst
//! mode the angles only move while the drive is off and the drive fires as
//! rectangular bursts with the angles frozen at the midpoint of each
//! geodesic sub-segment.
//!
//! The loop visits the north pole `D`, the south pole `B` and returns to the
//! start `A`:
//!
//! 1. `θ: θ0 → π` at `φ0`, π bursts
//! 2. `φ: φ0 → φ0 + 2γ₊` at `θ = π`, π/2 bursts
//! 3. `θ: π → 0`, π bursts
//! 4. `φ` reset at `θ = 0`, no bursts (the Hamiltonian ignores `φ` there)
//! 5. `θ: 0 → θ0` at `φ0`, π bursts
//!
//! An area-closure burst at the north pole brings the total pulse area to a
//! multiple of 2π so that no dynamical phase survives the loop.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::adiabatic::FlipEvent;
use crate::error::{Error, Result};
use crate::gates::GateSpec;
use crate::lambda_model::{check_theta, ControlPoint, EigenLabel};

/// Step number used for the area-closure burst.
pub const CLOSURE_STEP: u8 = 0;

const ANGLE_TOL: f64 = 1e-12;
const AREA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentTag {
    Ramp,
    Pulse,
    Hold,
}

impl SegmentTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentTag::Ramp => "ramp",
            SegmentTag::Pulse => "pulse",
            SegmentTag::Hold => "hold",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ramp" => Some(SegmentTag::Ramp),
            "pulse" => Some(SegmentTag::Pulse),
            "hold" => Some(SegmentTag::Hold),
            _ => None,
        }
    }
}

/// One piece of the control program: constant `omega` while `theta` and
/// `phi` sweep linearly between their endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub omega: f64,
    pub theta_start: f64,
    pub theta_end: f64,
    pub phi_start: f64,
    pub phi_end: f64,
    pub tag: SegmentTag,
    /// Loop step (1..=5) the segment belongs to, or [`CLOSURE_STEP`].
    pub step: u8,
}

impl Segment {
    pub fn ramp(duration: f64, theta: (f64, f64), phi: (f64, f64), step: u8) -> Self {
        Self {
            duration,
            omega: 0.0,
            theta_start: theta.0,
            theta_end: theta.1,
            phi_start: phi.0,
            phi_end: phi.1,
            tag: SegmentTag::Ramp,
            step,
        }
    }

    pub fn pulse(duration: f64, omega: f64, theta: f64, phi: f64, step: u8) -> Self {
        Self {
            duration,
            omega,
            theta_start: theta,
            theta_end: theta,
            phi_start: phi,
            phi_end: phi,
            tag: SegmentTag::Pulse,
            step,
        }
    }

    pub fn hold(duration: f64, omega: f64, theta: f64, phi: f64, step: u8) -> Self {
        Self {
            tag: SegmentTag::Hold,
            ..Self::pulse(duration, omega, theta, phi, step)
        }
    }

    pub fn area(&self) -> f64 {
        self.omega * self.duration
    }

    pub fn theta_rate(&self) -> f64 {
        if self.duration > 0.0 {
            (self.theta_end - self.theta_start) / self.duration
        } else {
            0.0
        }
    }

    pub fn phi_rate(&self) -> f64 {
        if self.duration > 0.0 {
            (self.phi_end - self.phi_start) / self.duration
        } else {
            0.0
        }
    }

    /// True when neither angle moves.
    pub fn is_static(&self) -> bool {
        self.theta_start == self.theta_end && self.phi_start == self.phi_end
    }

    /// Controls at `local` seconds into the segment.
    pub fn control_at(&self, local: f64) -> ControlPoint {
        let f = if self.duration > 0.0 {
            (local / self.duration).clamp(0.0, 1.0)
        } else {
            1.0
        };
        ControlPoint {
            omega: self.omega,
            theta: self.theta_start + f * (self.theta_end - self.theta_start),
            phi: self.phi_start + f * (self.phi_end - self.phi_start),
        }
    }

    /// Geometric phase `γ₊` gained over the first `fraction` of the segment:
    /// `½∫φ̇ sin²(θ/2) dt`, exact for linear sweeps.
    pub fn gamma_increment(&self, fraction: f64) -> f64 {
        let dphi = fraction * (self.phi_end - self.phi_start);
        if dphi == 0.0 {
            return 0.0;
        }
        let a = self.theta_start;
        let b = a + fraction * (self.theta_end - a);
        // Mean of sin²(θ/2) = (1 − cos θ)/2 over [a, b], written through a
        // sinc to stay accurate as b → a.
        let half = 0.5 * (b - a);
        let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
        let mean_cos = (0.5 * (a + b)).cos() * sinc;
        0.5 * dphi * 0.5 * (1.0 - mean_cos)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveMode {
    /// Angles move only while the drive is off.
    #[default]
    Burst,
    /// The drive stays on during ramps as well; for sensitivity studies.
    Continuous,
}

impl DriveMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DriveMode::Burst => "burst",
            DriveMode::Continuous => "continuous",
        }
    }
}

/// A burst in the control program and the eigenpairs whose relative
/// dynamical-phase factor it flips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent {
    /// Burst centre, seconds from the start of the schedule.
    pub time: f64,
    pub area: f64,
    pub flipped: Vec<(EigenLabel, EigenLabel)>,
    pub step: u8,
}

impl PulseEvent {
    pub fn flip_event(&self) -> FlipEvent {
        FlipEvent {
            time: self.time,
            pairs: self.flipped.clone(),
        }
    }
}

/// Pairs whose factor `e^{i(α_k−α_j)}` changes sign under a burst of `area`.
pub fn flipped_pairs(area: f64) -> Vec<(EigenLabel, EigenLabel)> {
    use EigenLabel::*;
    let is_odd_pi = |x: f64| ((x - PI).rem_euclid(TAU)).min(TAU - (x - PI).rem_euclid(TAU)) < AREA_TOL;
    let mut pairs = Vec::new();
    // α₊ − α_d = area, α₊ − α₋ = 2·area
    if is_odd_pi(area) {
        pairs.push((Plus, Dark));
        pairs.push((Minus, Dark));
    }
    if is_odd_pi(2.0 * area) {
        pairs.push((Plus, Minus));
    }
    pairs
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    segments: Vec<Segment>,
    starts: Vec<f64>,
    /// `(∫Ω, γ₊)` accumulated before each segment.
    prefix: Vec<(f64, f64)>,
    pub drive: DriveMode,
    pub gate: Option<GateSpec>,
    /// Sub-segment count per loop step (index 0 is step 1).
    pub n_per_step: Option<[usize; 5]>,
}

impl Schedule {
    pub fn new(segments: Vec<Segment>, drive: DriveMode) -> Self {
        let mut starts = Vec::with_capacity(segments.len());
        let mut prefix = Vec::with_capacity(segments.len());
        let (mut t, mut area, mut gamma) = (0.0, 0.0, 0.0);
        for s in &segments {
            starts.push(t);
            prefix.push((area, gamma));
            t += s.duration;
            area += s.area();
            gamma += s.gamma_increment(1.0);
        }
        Self {
            segments,
            starts,
            prefix,
            drive,
            gate: None,
            n_per_step: None,
        }
    }

    pub fn with_gate(mut self, gate: GateSpec) -> Self {
        self.gate = Some(gate);
        self
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Start time of segment `index`.
    pub fn start_of(&self, index: usize) -> f64 {
        self.starts[index]
    }

    pub fn duration(&self) -> f64 {
        match (self.starts.last(), self.segments.last()) {
            (Some(t), Some(s)) => t + s.duration,
            _ => 0.0,
        }
    }

    pub fn total_area(&self) -> f64 {
        self.segments.iter().map(Segment::area).sum()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let duration = self.duration();
        if !(t >= 0.0 && t <= duration * (1.0 + 1e-12)) {
            return Err(Error::TimeOutOfRange { t, duration });
        }
        Ok(())
    }

    /// Segment active at time `t` and the local time inside it. Zero-length
    /// segments are never returned; `t` equal to the total duration maps to
    /// the end of the last segment with positive length.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        self.check_time(t)?;
        let mut last = None;
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.duration <= 0.0 {
                continue;
            }
            let start = self.starts[i];
            if t < start + seg.duration {
                return Ok((i, (t - start).max(0.0)));
            }
            last = Some(i);
        }
        match last {
            Some(i) => Ok((i, self.segments[i].duration)),
            None => Ok((0, 0.0)),
        }
    }

    pub fn control_at(&self, t: f64) -> Result<ControlPoint> {
        if self.segments.is_empty() {
            return Err(Error::TimeOutOfRange { t, duration: 0.0 });
        }
        let (i, local) = self.locate(t)?;
        Ok(self.segments[i].control_at(local))
    }

    /// Controls at the very start, before any zero-length segment.
    pub fn initial_control(&self) -> Option<ControlPoint> {
        self.segments.first().map(|s| s.control_at(0.0))
    }

    pub fn final_control(&self) -> Option<ControlPoint> {
        self.segments.last().map(|s| s.control_at(s.duration))
    }

    /// `(∫Ω dt, γ₊)` accumulated over `[0, t]`.
    pub fn integrals_until(&self, t: f64) -> Result<(f64, f64)> {
        if self.segments.is_empty() {
            self.check_time(t)?;
            return Ok((0.0, 0.0));
        }
        let (i, local) = self.locate(t)?;
        if t >= self.duration() {
            let last = self.segments.len() - 1;
            return Ok(self.segment_integrals(last, self.segments[last].duration));
        }
        Ok(self.segment_integrals(i, local))
    }

    /// `(∫Ω dt, γ₊)` accumulated up to `local` seconds into segment `index`.
    pub fn segment_integrals(&self, index: usize, local: f64) -> (f64, f64) {
        let seg = &self.segments[index];
        let (area, gamma) = self.prefix[index];
        if seg.duration <= 0.0 {
            return (area + seg.area(), gamma + seg.gamma_increment(1.0));
        }
        let f = (local / seg.duration).clamp(0.0, 1.0);
        (area + seg.omega * seg.duration * f, gamma + seg.gamma_increment(f))
    }

    pub fn pulse_plan(&self) -> Vec<PulseEvent> {
        self.segments
            .iter()
            .zip(&self.starts)
            .filter(|(s, _)| s.tag == SegmentTag::Pulse)
            .map(|(s, &start)| PulseEvent {
                time: start + 0.5 * s.duration,
                area: s.area(),
                flipped: flipped_pairs(s.area()),
                step: s.step,
            })
            .collect()
    }

    /// The same path with every burst collapsed to an instant: pulse
    /// segments are removed and replaced by flip events at the times they
    /// would occupy in the compressed timeline.
    pub fn instantaneous_flip_model(&self) -> (Schedule, Vec<FlipEvent>) {
        let mut segments = Vec::new();
        let mut flips = Vec::new();
        let mut t = 0.0;
        for seg in &self.segments {
            if seg.tag == SegmentTag::Pulse {
                let pairs = flipped_pairs(seg.area());
                if !pairs.is_empty() {
                    flips.push(FlipEvent { time: t, pairs });
                }
            } else {
                segments.push(Segment { omega: 0.0, ..*seg });
                t += seg.duration;
            }
        }
        let mut reduced = Schedule::new(segments, DriveMode::Burst);
        reduced.gate = self.gate.clone();
        reduced.n_per_step = self.n_per_step;
        (reduced, flips)
    }

    /// The same control shape stretched to total duration `tau`; amplitudes
    /// are unchanged, so the dynamical phases scale with `tau`.
    pub fn rescaled(&self, tau: f64) -> Result<Schedule> {
        let current = self.duration();
        if !(tau > 0.0) || current <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("cannot rescale a schedule of length {current} to {tau}"),
            });
        }
        let k = tau / current;
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                duration: s.duration * k,
                ..*s
            })
            .collect();
        let mut out = Schedule::new(segments, self.drive);
        out.gate = self.gate.clone();
        out.n_per_step = self.n_per_step;
        Ok(out)
    }

    /// Line-oriented text form: one segment per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# holonomic schedule v1\n");
        out.push_str("# duration_s omega_rad_per_s theta_start theta_end phi_start phi_end tag step\n");
        out.push_str(&format!("drive {}\n", self.drive.as_str()));
        if let Some(g) = &self.gate {
            out.push_str(&format!(
                "gate {} {} {} {} {}\n",
                g.label.replace(char::is_whitespace, "_"),
                g.qubits,
                g.theta0,
                g.phi0,
                g.gamma_plus
            ));
        }
        if let Some(n) = self.n_per_step {
            out.push_str(&format!("steps {} {} {} {} {}\n", n[0], n[1], n[2], n[3], n[4]));
        }
        for s in &self.segments {
            out.push_str(&format!(
                "{} {} {} {} {} {} {} {}\n",
                s.duration,
                s.omega,
                s.theta_start,
                s.theta_end,
                s.phi_start,
                s.phi_end,
                s.tag.as_str(),
                s.step
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Schedule> {
        let mut segments = Vec::new();
        let mut drive = DriveMode::Burst;
        let mut gate = None;
        let mut n_per_step = None;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let err = |reason: String| Error::ScheduleParse { line: line_no, reason };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| err(format!("`{s}` is not a number")))
            };
            match fields[0] {
                "drive" => {
                    drive = match fields.get(1).copied() {
                        Some("burst") => DriveMode::Burst,
                        Some("continuous") => DriveMode::Continuous,
                        other => return Err(err(format!("unknown drive mode {other:?}"))),
                    }
                }
                "gate" => {
                    if fields.len() != 6 {
                        return Err(err("gate line needs: label qubits theta0 phi0 gamma_plus".into()));
                    }
                    let qubits: u8 = fields[2]
                        .parse()
                        .map_err(|_| err(format!("bad qubit count `{}`", fields[2])))?;
                    let spec = GateSpec::from_parameters(
                        fields[1],
                        num(fields[3])?,
                        num(fields[4])?,
                        num(fields[5])?,
                    )
                    .map_err(|e| err(e.to_string()))?;
                    gate = Some(if qubits == 2 { spec.controlled_spec() } else { spec });
                }
                "steps" => {
                    if fields.len() != 6 {
                        return Err(err("steps line needs five counts".into()));
                    }
                    let mut n = [0usize; 5];
                    for (slot, f) in n.iter_mut().zip(&fields[1..]) {
                        *slot = f.parse().map_err(|_| err(format!("bad step count `{f}`")))?;
                    }
                    n_per_step = Some(n);
                }
                _ => {
                    if fields.len() != 8 {
                        return Err(err(format!("expected 8 segment fields, found {}", fields.len())));
                    }
                    let tag = SegmentTag::parse(fields[6])
                        .ok_or_else(|| err(format!("unknown segment tag `{}`", fields[6])))?;
                    let step: u8 = fields[7]
                        .parse()
                        .map_err(|_| err(format!("bad step `{}`", fields[7])))?;
                    segments.push(Segment {
                        duration: num(fields[0])?,
                        omega: num(fields[1])?,
                        theta_start: num(fields[2])?,
                        theta_end: num(fields[3])?,
                        phi_start: num(fields[4])?,
                        phi_end: num(fields[5])?,
                        tag,
                        step,
                    });
                }
            }
        }
        let mut schedule = Schedule::new(segments, drive);
        schedule.gate = gate;
        schedule.n_per_step = n_per_step;
        Ok(schedule)
    }
}

/// How long the angle sweeps take.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RampTiming {
    /// Total ramp time of every swept step, in seconds.
    StepDuration(f64),
    /// Angular speed in rad/s.
    Rate(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    /// Sub-segments for steps 1..=5; the step-4 entry is ignored.
    pub n_per_step: [usize; 5],
    /// Burst amplitude in rad/s.
    pub burst_omega: f64,
    pub ramp: RampTiming,
    pub drive: DriveMode,
    /// Duration of the step-4 azimuth reset; zero means instantaneous.
    pub step4_duration: f64,
    /// When set, every nonzero ramp duration is rounded up to a whole
    /// multiple of this many seconds.
    pub gap_quantum: Option<f64>,
}

impl PlanConfig {
    /// Rectangular 2π×10 MHz bursts, five sub-segments per step and 25 ns
    /// of sweeping per step.
    pub fn single_qubit_default() -> Self {
        Self {
            n_per_step: [5; 5],
            burst_omega: TAU * 10e6,
            ramp: RampTiming::StepDuration(25e-9),
            drive: DriveMode::Burst,
            step4_duration: 0.0,
            gap_quantum: None,
        }
    }

    /// Three sub-segments for the θ sweeps and five for the φ sweep, with
    /// bursts at the effective two-photon amplitude `2Ω₁₁²/Δ`.
    ///
    /// Ramps last whole periods of the detuning `2π/Δ`, so the off-resonant
    /// amplitude left behind by one burst meets the next burst's drive in
    /// phase, as if the drive had never paused.
    pub fn two_qubit_default(omega11: f64, delta: f64) -> Self {
        Self {
            n_per_step: [3, 5, 3, 1, 3],
            burst_omega: 2.0 * omega11 * omega11 / delta,
            ramp: RampTiming::StepDuration(25e-9),
            drive: DriveMode::Burst,
            step4_duration: 0.0,
            gap_quantum: Some(TAU / delta),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(i) = [0usize, 1, 2, 4].into_iter().find(|&i| self.n_per_step[i] == 0) {
            return Err(Error::InvalidParameter {
                name: "n_per_step",
                reason: format!("step {} needs at least one sub-segment", i + 1),
            });
        }
        if !(self.burst_omega > 0.0) || !self.burst_omega.is_finite() {
            return Err(Error::InvalidParameter {
                name: "burst_omega",
                reason: format!("burst amplitude must be positive, got {}", self.burst_omega),
            });
        }
        let ramp_ok = match self.ramp {
            RampTiming::StepDuration(d) => d > 0.0 && d.is_finite(),
            RampTiming::Rate(r) => r > 0.0 && r.is_finite(),
        };
        if !ramp_ok {
            return Err(Error::InvalidParameter {
                name: "ramp",
                reason: format!("ramp timing must be positive, got {:?}", self.ramp),
            });
        }
        if !(self.step4_duration >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "step4_duration",
                reason: "must be non-negative".into(),
            });
        }
        if let Some(q) = self.gap_quantum {
            if !(q > 0.0) || !q.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "gap_quantum",
                    reason: format!("must be positive, got {q}"),
                });
            }
        }
        Ok(())
    }

    fn quantize(&self, duration: f64) -> f64 {
        match self.gap_quantum {
            Some(q) if duration > 0.0 => (duration / q - 1e-9).ceil().max(1.0) * q,
            _ => duration,
        }
    }

    fn ramp_time(&self, sweep: f64) -> f64 {
        match self.ramp {
            RampTiming::StepDuration(d) => d,
            RampTiming::Rate(r) => sweep.abs() / r,
        }
    }

    fn ramp_omega(&self) -> f64 {
        match self.drive {
            DriveMode::Burst => 0.0,
            DriveMode::Continuous => self.burst_omega,
        }
    }
}

enum Sweep {
    Theta { from: f64, to: f64, phi: f64 },
    Phi { from: f64, to: f64, theta: f64 },
}

struct Planner<'a> {
    cfg: &'a PlanConfig,
    segments: Vec<Segment>,
}

impl Planner<'_> {
    /// Splits a geodesic sweep into `n` equal pieces with a burst of `area`
    /// at each midpoint.
    fn geodesic(&mut self, step: u8, sweep: Sweep, n: usize, area: f64) {
        let (span, angle_at) = match sweep {
            Sweep::Theta { from, to, phi } => (to - from, Box::new(move |x: f64| (from + x * (to - from), phi)) as Box<dyn Fn(f64) -> (f64, f64)>),
            Sweep::Phi { from, to, theta } => (to - from, Box::new(move |x: f64| (theta, from + x * (to - from))) as Box<dyn Fn(f64) -> (f64, f64)>),
        };
        if span == 0.0 {
            return;
        }
        let ramp_total = self.cfg.ramp_time(span);
        let omega = self.cfg.burst_omega;
        let ramp_omega = self.cfg.ramp_omega();
        let quantize = |d| self.cfg.quantize(d);
        let push_ramp = |segs: &mut Vec<Segment>, x0: f64, x1: f64| {
            let (t0, p0) = angle_at(x0);
            let (t1, p1) = angle_at(x1);
            segs.push(Segment {
                omega: ramp_omega,
                ..Segment::ramp(quantize(ramp_total * (x1 - x0)), (t0, t1), (p0, p1), step)
            });
        };
        let nf = n as f64;
        let mut x = 0.0;
        for k in 0..n {
            let mid = (k as f64 + 0.5) / nf;
            push_ramp(&mut self.segments, x, mid);
            let (theta, phi) = angle_at(mid);
            self.segments
                .push(Segment::pulse(area / omega, omega, theta, phi, step));
            x = mid;
        }
        push_ramp(&mut self.segments, x, 1.0);
    }
}

fn check_plan_angles(theta0: f64, phi0: f64, gamma_plus: f64) -> Result<()> {
    check_theta(theta0)?;
    if !phi0.is_finite() || !gamma_plus.is_finite() {
        return Err(Error::InvalidParameter {
            name: "phi0/gamma_plus",
            reason: "angles must be finite".into(),
        });
    }
    Ok(())
}

fn plan(theta0: f64, phi0: f64, gamma_plus: f64, cfg: &PlanConfig, keep_step4: bool) -> Result<Schedule> {
    check_plan_angles(theta0, phi0, gamma_plus)?;
    cfg.validate()?;
    let n = cfg.n_per_step;
    let phi1 = phi0 + 2.0 * gamma_plus;
    let mut p = Planner { cfg, segments: Vec::new() };

    p.geodesic(1, Sweep::Theta { from: theta0, to: PI, phi: phi0 }, n[0], PI);
    p.geodesic(2, Sweep::Phi { from: phi0, to: phi1, theta: PI }, n[1], PI / 2.0);
    p.geodesic(3, Sweep::Theta { from: PI, to: 0.0, phi: phi1 }, n[2], PI);

    let return_phi = if keep_step4 {
        if phi1 != phi0 {
            p.segments.push(Segment::ramp(cfg.quantize(cfg.step4_duration), (0.0, 0.0), (phi1, phi0), 4));
        }
        phi0
    } else {
        phi1
    };

    let mut step5 = Planner { cfg, segments: Vec::new() };
    step5.geodesic(5, Sweep::Theta { from: 0.0, to: theta0, phi: return_phi }, n[4], PI);
    let area: f64 = p.segments.iter().chain(&step5.segments).map(Segment::area).sum();
    let deficit = (-area).rem_euclid(TAU);
    if deficit > AREA_TOL && TAU - deficit > AREA_TOL {
        p.segments.push(Segment::pulse(
            deficit / cfg.burst_omega,
            cfg.burst_omega,
            0.0,
            return_phi,
            CLOSURE_STEP,
        ));
    }

    p.segments.extend(step5.segments);

    let mut schedule = Schedule::new(p.segments, cfg.drive);
    schedule.n_per_step = Some(n);
    Ok(schedule)
}

/// Plans the five-step single-qubit loop for the gate with holonomy
/// parameters `(theta0, phi0, gamma_plus)`.
pub fn plan_single_qubit(theta0: f64, phi0: f64, gamma_plus: f64, cfg: &PlanConfig) -> Result<Schedule> {
    let mut s = plan(theta0, phi0, gamma_plus, cfg, true)?;
    s.gate = Some(GateSpec::from_parameters("custom", theta0, phi0, gamma_plus)?);
    Ok(s)
}

/// Plans the two-qubit loop on the effective Λ system. Step 4 is dropped
/// whenever the return leg is unaffected by it: the azimuth already agrees
/// modulo 2π, or the loop starts at the north pole where the frame does not
/// depend on `φ`.
pub fn plan_two_qubit(theta0: f64, phi0: f64, gamma_plus: f64, cfg: &PlanConfig) -> Result<Schedule> {
    check_plan_angles(theta0, phi0, gamma_plus)?;
    let wrapped = (2.0 * gamma_plus).rem_euclid(TAU);
    let phi_agrees = wrapped.min(TAU - wrapped) < ANGLE_TOL;
    let keep_step4 = !(phi_agrees || theta0 == 0.0);
    let mut s = plan(theta0, phi0, gamma_plus, cfg, keep_step4)?;
    s.gate = Some(GateSpec::from_parameters("custom", theta0, phi0, gamma_plus)?.controlled_spec());
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NegativeDuration { index: usize },
    InvalidOmega { index: usize },
    ThetaOutOfRange { index: usize },
    PulseMovesAngles { index: usize },
    DrivenRamp { index: usize },
    Discontinuity { index: usize, dtheta: f64, dphi: f64 },
    LoopNotClosed { dtheta: f64, dphi: f64 },
    AreaNotClosed { area_mod_2pi: f64 },
    GammaMismatch { predicted: f64, requested: f64 },
    Empty,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeDuration { index } => write!(f, "segment {index}: negative duration"),
            Violation::InvalidOmega { index } => write!(f, "segment {index}: omega must be finite and >= 0"),
            Violation::ThetaOutOfRange { index } => write!(f, "segment {index}: theta outside [0, pi]"),
            Violation::PulseMovesAngles { index } => {
                write!(f, "segment {index}: pulse must keep angles fixed and omega > 0")
            }
            Violation::DrivenRamp { index } => write!(f, "segment {index}: ramp with drive on in burst mode"),
            Violation::Discontinuity { index, dtheta, dphi } => write!(
                f,
                "segment {index}: angles jump by (dtheta, dphi) = ({dtheta:.3e}, {dphi:.3e})"
            ),
            Violation::LoopNotClosed { dtheta, dphi } => {
                write!(f, "loop not closed: (dtheta, dphi) = ({dtheta:.3e}, {dphi:.3e})")
            }
            Violation::AreaNotClosed { area_mod_2pi } => {
                write!(f, "total pulse area is {area_mod_2pi:.6} away from a multiple of 2pi")
            }
            Violation::GammaMismatch { predicted, requested } => {
                write!(f, "geometric phase {predicted} differs from requested {requested}")
            }
            Violation::Empty => write!(f, "schedule has no segments"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub violations: Vec<Violation>,
    /// Pulse area per loop step, rad.
    pub step_areas: BTreeMap<u8, f64>,
    pub total_area: f64,
    /// Signed distance of the total area to the nearest multiple of 2π.
    pub area_mod_2pi: f64,
    /// `γ₊` accumulated over the whole schedule.
    pub gamma_plus: f64,
    pub duration: f64,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Signed distance from `x` to the nearest multiple of 2π, in `(−π, π]`.
pub fn wrap_to_pi(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Checks continuity, loop closure and area closure, and reports the
/// per-step areas and the predicted geometric phase.
pub fn audit(schedule: &Schedule) -> AuditReport {
    let mut violations = Vec::new();
    let mut step_areas = BTreeMap::new();
    let segs = schedule.segments();
    if segs.is_empty() {
        violations.push(Violation::Empty);
    }
    for (i, s) in segs.iter().enumerate() {
        if !(s.duration >= 0.0) {
            violations.push(Violation::NegativeDuration { index: i });
        }
        if !(s.omega >= 0.0) || !s.omega.is_finite() {
            violations.push(Violation::InvalidOmega { index: i });
        }
        let range = -ANGLE_TOL..=PI + ANGLE_TOL;
        if !range.contains(&s.theta_start) || !range.contains(&s.theta_end) {
            violations.push(Violation::ThetaOutOfRange { index: i });
        }
        match s.tag {
            SegmentTag::Pulse if !s.is_static() || !(s.omega > 0.0) => {
                violations.push(Violation::PulseMovesAngles { index: i })
            }
            SegmentTag::Ramp if schedule.drive == DriveMode::Burst && s.omega != 0.0 => {
                violations.push(Violation::DrivenRamp { index: i })
            }
            _ => {}
        }
        if i > 0 {
            let prev = &segs[i - 1];
            let dtheta = s.theta_start - prev.theta_end;
            let dphi = s.phi_start - prev.phi_end;
            if dtheta.abs() > ANGLE_TOL || dphi.abs() > ANGLE_TOL {
                violations.push(Violation::Discontinuity { index: i, dtheta, dphi });
            }
        }
        *step_areas.entry(s.step).or_insert(0.0) += s.area();
    }

    let total_area = schedule.total_area();
    let area_mod_2pi = wrap_to_pi(total_area);
    if area_mod_2pi.abs() > AREA_TOL {
        violations.push(Violation::AreaNotClosed { area_mod_2pi });
    }

    if let (Some(first), Some(last)) = (schedule.initial_control(), schedule.final_control()) {
        let dtheta = last.theta - first.theta;
        let dphi = wrap_to_pi(last.phi - first.phi);
        // At the north pole the eigenframe does not depend on φ.
        let phi_matters = first.theta.abs() > ANGLE_TOL;
        if dtheta.abs() > ANGLE_TOL || (phi_matters && dphi.abs() > ANGLE_TOL) {
            violations.push(Violation::LoopNotClosed { dtheta, dphi });
        }
    }

    let gamma_plus = schedule
        .integrals_until(schedule.duration())
        .map(|(_, g)| g)
        .unwrap_or(0.0);
    if let Some(gate) = &schedule.gate {
        if (gamma_plus - gate.gamma_plus).abs() > AREA_TOL {
            violations.push(Violation::GammaMismatch {
                predicted: gamma_plus,
                requested: gate.gamma_plus,
            });
        }
    }

    AuditReport {
        violations,
        step_areas,
        total_area,
        area_mod_2pi,
        gamma_plus,
        duration: schedule.duration(),
    }
}
