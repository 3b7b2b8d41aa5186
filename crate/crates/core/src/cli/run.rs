//! Experiment execution and report assembly.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, GateChoice, Mode, RawConfig, V12Choice};
use crate::adiabatic::{adiabatic_operator, dyson_bound, f_integral, phase_integral_max, transition_operator, transition_operator_lab};
use crate::error::{Error, Result};
use crate::gates::{controlled, controlled_phase_spec, table1, GateSpec, TABLE1_LABELS};
use crate::lambda_model::{holonomy_gate, loop_unitary_3level, BASIS_LABELS};
use crate::propagate::{evolve, gate_error, state_fidelity, Drive, EvolveOptions, LambdaDrive, PropagationResult, TraceRow};
use crate::qmat::{distance_up_to_phase, hs_norm, identity, CMatrix, CVector};
use crate::rydberg::{EffectiveDrive, RydbergFullDrive, V12Mode, COMPUTATIONAL, LABELS, LAMBDA_EMBEDDING};
use crate::schedule::{audit, plan_single_qubit, plan_two_qubit, AuditReport, DriveMode, PlanConfig, RampTiming, Schedule, Segment};

/// Summary report written as `summary.json`.
///
/// The first seven keys form the stable schema; `mode`, `audit_violations`
/// and `metrics` carry mode-specific detail. Quantities a mode does not
/// produce are `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub gate: String,
    pub fidelity: Option<f64>,
    pub gate_error: Option<f64>,
    pub leakage: Option<f64>,
    pub area_mod_2pi: Option<f64>,
    pub gamma_plus: Option<f64>,
    pub runtime_s: f64,
    pub mode: String,
    pub audit_violations: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
}

/// Everything one experiment produces.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub summary: Summary,
    pub trace_csv: Option<String>,
    pub schedule_text: Option<String>,
    /// `adiabaticity.csv` in adiabaticity mode.
    pub table_csv: Option<String>,
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const SCHEDULE_FILE: &str = "schedule.txt";
pub const ADIABATICITY_FILE: &str = "adiabaticity.csv";
pub const SWEEP_CSV_FILE: &str = "sweep.csv";
pub const SWEEP_JSON_FILE: &str = "sweep.json";

/// Gate spec for the configured label or parameter triple.
pub fn resolve_gate(choice: &GateChoice, mode: Mode) -> Result<GateSpec> {
    let spec = match choice {
        GateChoice::Label(label) => table1(label)?,
        GateChoice::Parameters { theta0, phi0, gamma_plus } => GateSpec::from_parameters("custom", *theta0, *phi0, *gamma_plus)?,
    };
    if spec.qubits == 2 && !mode.is_two_qubit() {
        return Err(Error::InvalidParameter {
            name: "gate",
            reason: format!("{} is a two-qubit gate; use a two-qubit mode", spec.label),
        });
    }
    Ok(spec)
}

/// Planner settings for `cfg`.
pub fn plan_config(cfg: &ExperimentConfig) -> PlanConfig {
    let mut pc = if cfg.mode.is_two_qubit() {
        let mut pc = PlanConfig::two_qubit_default(cfg.omega, cfg.delta_ratio * cfg.omega);
        if cfg.quantize_gaps == Some(false) {
            pc.gap_quantum = None;
        }
        pc
    } else {
        PlanConfig {
            burst_omega: cfg.omega,
            ..PlanConfig::single_qubit_default()
        }
    };
    pc.ramp = RampTiming::StepDuration(cfg.ramp);
    pc.drive = cfg.drive;
    if let Some(n) = cfg.n_per_step {
        pc.n_per_step = n;
    }
    pc
}

/// Plans the configured loop and refuses schedules that fail the audit.
pub fn planned_schedule(cfg: &ExperimentConfig, spec: &GateSpec) -> Result<(Schedule, AuditReport)> {
    let pc = plan_config(cfg);
    let schedule = if cfg.mode.is_two_qubit() {
        plan_two_qubit(spec.theta0, spec.phi0, spec.gamma_plus, &pc)?
    } else {
        plan_single_qubit(spec.theta0, spec.phi0, spec.gamma_plus, &pc)?
    };
    let mut schedule = schedule;
    if let Some(g) = schedule.gate.as_mut() {
        g.label = spec.label.clone();
    }
    let report = audit(&schedule);
    if !report.is_clean() {
        let text: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(Error::Audit(text.join("; ")));
    }
    Ok((schedule, report))
}

/// The basis a mode propagates in, and where the Λ levels `(e, 0, 1)` sit.
fn basis_of(mode: Mode) -> (Vec<String>, [usize; 3]) {
    match mode {
        Mode::TwoQubitFull => (LABELS.iter().map(|s| s.to_string()).collect(), LAMBDA_EMBEDDING),
        Mode::TwoQubitEffective => (LAMBDA_EMBEDDING.iter().map(|&k| LABELS[k].to_string()).collect(), [0, 1, 2]),
        _ => (BASIS_LABELS.iter().map(|s| s.to_string()).collect(), [0, 1, 2]),
    }
}

/// Initial state from a basis label or `+` (equal superposition of the two
/// computational Λ levels). `auto` picks `+` for loops starting at the north
/// pole, where a basis state would only acquire a phase.
pub fn initial_state(label: &str, mode: Mode, spec: &GateSpec) -> Result<CVector> {
    let (labels, lambda) = basis_of(mode);
    let mut psi = CVector::zeros(labels.len());
    let label = match label {
        "auto" if spec.theta0 == 0.0 => "+",
        "auto" => labels[lambda[1]].as_str(),
        other => other,
    };
    if label == "+" {
        psi[lambda[1]] = FRAC_1_SQRT_2.into();
        psi[lambda[2]] = FRAC_1_SQRT_2.into();
        return Ok(psi);
    }
    let k = labels.iter().position(|l| l == label).ok_or_else(|| Error::InvalidParameter {
        name: "initial",
        reason: format!("`{label}` is not one of {:?} or `+`", labels),
    })?;
    psi[k] = 1.0.into();
    Ok(psi)
}

/// Ideal loop unitary in the mode's basis: the Λ loop on its embedding and
/// identity elsewhere.
fn ideal_unitary(mode: Mode, spec: &GateSpec) -> CMatrix {
    let (labels, lambda) = basis_of(mode);
    let loop3 = loop_unitary_3level(spec.theta0, spec.phi0, spec.gamma_plus);
    let mut u = identity(labels.len());
    for r in 0..3 {
        for c in 0..3 {
            u[(lambda[r], lambda[c])] = loop3[(r, c)];
        }
    }
    u
}

/// Computational subspace and the gate expected on it.
fn gate_target(mode: Mode, spec: &GateSpec) -> (Vec<usize>, CMatrix) {
    match mode {
        Mode::TwoQubitFull => (COMPUTATIONAL.to_vec(), controlled(spec)),
        _ => (vec![1, 2], holonomy_gate(spec.theta0, spec.phi0, spec.gamma_plus)),
    }
}

fn base_summary(spec: &GateSpec, mode: Mode, report: &AuditReport) -> Summary {
    Summary {
        gate: spec.label.clone(),
        fidelity: None,
        gate_error: None,
        leakage: None,
        area_mod_2pi: Some(report.area_mod_2pi),
        gamma_plus: Some(report.gamma_plus),
        runtime_s: 0.0,
        mode: mode.as_str().to_string(),
        audit_violations: Vec::new(),
        metrics: BTreeMap::new(),
    }
}

fn propagate_mode(cfg: &ExperimentConfig, spec: &GateSpec) -> Result<Artifacts> {
    let (schedule, report) = planned_schedule(cfg, spec)?;
    let delta = cfg.delta_ratio * cfg.omega;
    let full;
    let drive: &dyn Drive = match cfg.mode {
        Mode::SingleQubit => &LambdaDrive,
        Mode::TwoQubitEffective => &EffectiveDrive,
        _ => {
            let v12 = match cfg.v12 {
                V12Choice::Envelope => V12Mode::Envelope,
                V12Choice::FixedAtPeak => V12Mode::fixed_at_peak(plan_config(cfg).burst_omega, delta)?,
            };
            full = RydbergFullDrive::new(delta, v12)?;
            &full
        }
    };
    let psi0 = initial_state(&cfg.initial, cfg.mode, spec)?;
    let target_state = ideal_unitary(cfg.mode, spec) * &psi0;
    let options = EvolveOptions {
        substep: cfg.substep,
        trace_rows: cfg.trace_rows,
        ..EvolveOptions::from_state(psi0).with_reference(target_state.clone())
    };
    let result = evolve(&schedule, drive, &options)?;
    let (subspace, target) = gate_target(cfg.mode, spec);
    let ge = gate_error(&result.final_unitary, &target, &subspace)?;

    let mut summary = base_summary(spec, cfg.mode, &report);
    let final_state = result.final_state.as_ref().expect("initial state was supplied");
    summary.fidelity = Some(state_fidelity(&target_state, final_state)?);
    summary.gate_error = Some(ge.error);
    summary.leakage = Some(ge.leakage);
    summary.metrics.insert("duration_s".into(), schedule.duration());
    summary.metrics.insert("substep_s".into(), result.substep);
    summary.metrics.insert("refinement_delta".into(), result.refinement_delta);
    summary.metrics.insert("bursts".into(), schedule.pulse_plan().len() as f64);
    if cfg.mode == Mode::TwoQubitFull {
        summary.metrics.insert("delta_rad_per_s".into(), delta);
    }
    Ok(Artifacts {
        summary,
        trace_csv: (cfg.trace_rows > 0).then(|| result.trace_csv()),
        schedule_text: Some(schedule.to_text()),
        table_csv: None,
    })
}

/// Toggling-frame prediction: `U = U_A · U_T` with the bursts replaced by
/// instantaneous flips.
fn toggling_mode(cfg: &ExperimentConfig, spec: &GateSpec) -> Result<Artifacts> {
    let (schedule, report) = planned_schedule(cfg, spec)?;
    let (reduced, flips) = schedule.instantaneous_flip_model();
    let u_t = transition_operator(&reduced, &flips)?;
    let residual = hs_norm(&(&u_t - identity(3)));
    let realized = adiabatic_operator(&schedule, schedule.duration())?
        * transition_operator_lab(&reduced, &flips, reduced.duration())?;

    let psi0 = initial_state(&cfg.initial, cfg.mode, spec)?;
    let target_state = ideal_unitary(cfg.mode, spec) * &psi0;
    let (subspace, target) = gate_target(cfg.mode, spec);
    let ge = gate_error(&realized, &target, &subspace)?;

    let duration = schedule.duration();
    let n = cfg.trace_rows;
    let mut trace = Vec::with_capacity(n);
    let mut populations = Vec::with_capacity(n);
    for k in 0..n {
        let t = if n > 1 { duration * k as f64 / (n - 1) as f64 } else { duration };
        let psi = adiabatic_operator(&schedule, t)? * &psi0;
        populations.push(psi.iter().map(|z| z.norm_sqr()).collect());
        trace.push(TraceRow {
            t,
            fidelity: target_state.dotc(&psi).norm_sqr(),
        });
    }
    let table = PropagationResult {
        final_unitary: realized.clone(),
        final_state: Some(&realized * &psi0),
        trace,
        populations,
        labels: basis_of(cfg.mode).0,
        substep: 0.0,
        refinement_delta: 0.0,
    };

    let mut summary = base_summary(spec, cfg.mode, &report);
    summary.fidelity = Some(state_fidelity(&target_state, &(&realized * &psi0))?);
    summary.gate_error = Some(ge.error);
    summary.leakage = Some(ge.leakage);
    summary.metrics.insert("toggling_residual".into(), residual);
    summary.metrics.insert("flips".into(), flips.len() as f64);
    summary.metrics.insert("duration_s".into(), duration);
    Ok(Artifacts {
        summary,
        trace_csv: (n > 0).then(|| table.trace_csv()),
        schedule_text: Some(schedule.to_text()),
        table_csv: None,
    })
}

/// Toy phase integral and flip-free ramp scaling tables.
fn adiabaticity_mode(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let spec = &cfg.adiabaticity;
    let mut csv = String::from("kind,x,max_f_norm,dyson_bound\n");
    let mut metrics = BTreeMap::new();
    for (k, &x) in spec.toy.iter().enumerate() {
        let m = phase_integral_max(x)?;
        let _ = writeln!(csv, "toy,{x:.11e},{m:.11e},");
        metrics.insert(format!("toy_{k}_max"), m);
    }
    let ramp = Schedule::new(
        vec![Segment {
            omega: 1.0,
            ..Segment::ramp(1.0, (0.0, spec.theta_span), (0.0, 0.0), 1)
        }],
        DriveMode::Continuous,
    );
    let mut points = Vec::new();
    for &tau in &spec.omega_tau {
        let r = f_integral(&ramp, tau)?;
        let bound = dyson_bound(&r);
        let _ = writeln!(csv, "ramp,{tau:.11e},{:.11e},{bound:.11e}", r.max_f_norm);
        points.push((tau.ln(), r.max_f_norm.ln()));
    }
    if points.len() >= 2 {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx > 0.0 {
            metrics.insert("ramp_loglog_slope".into(), sxy / sxx);
        }
    }
    Ok(Artifacts {
        summary: Summary {
            gate: "none".into(),
            fidelity: None,
            gate_error: None,
            leakage: None,
            area_mod_2pi: None,
            gamma_plus: None,
            runtime_s: 0.0,
            mode: Mode::Adiabaticity.as_str().into(),
            audit_violations: Vec::new(),
            metrics,
        },
        trace_csv: None,
        schedule_text: None,
        table_csv: Some(csv),
    })
}

/// Runs one experiment without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let start = Instant::now();
    let mut artifacts = match cfg.mode {
        Mode::Adiabaticity => adiabaticity_mode(cfg)?,
        mode => {
            let spec = resolve_gate(&cfg.gate, mode)?;
            if mode == Mode::Toggling {
                toggling_mode(cfg, &spec)?
            } else {
                propagate_mode(cfg, &spec)?
            }
        }
    };
    artifacts.summary.runtime_s = start.elapsed().as_secs_f64();
    Ok(artifacts)
}

/// Writes the artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&artifacts.summary)? + "\n")?;
    if let Some(csv) = &artifacts.trace_csv {
        fs::write(dir.join(TRACE_FILE), csv)?;
    }
    if let Some(text) = &artifacts.schedule_text {
        fs::write(dir.join(SCHEDULE_FILE), text)?;
    }
    if let Some(csv) = &artifacts.table_csv {
        fs::write(dir.join(ADIABATICITY_FILE), csv)?;
    }
    Ok(())
}

/// Result of a sweep, in grid order.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub axis: String,
    pub points: Vec<(String, Summary)>,
}

impl SweepOutcome {
    /// One row per grid point; runtime is left out so reruns are identical.
    pub fn csv(&self) -> String {
        let mut out = format!("{},fidelity,gate_error,leakage,area_mod_2pi,gamma_plus\n", self.axis);
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.11e}"));
        for (value, s) in &self.points {
            let _ = writeln!(
                out,
                "{value},{},{},{},{},{}",
                cell(s.fidelity),
                cell(s.gate_error),
                cell(s.leakage),
                cell(s.area_mod_2pi),
                cell(s.gamma_plus)
            );
        }
        out
    }
}

/// Runs every grid point of the configured sweep on a pool of `jobs`
/// workers (all cores when `None`) and collects the results in grid order.
pub fn run_sweep(raw: &RawConfig, jobs: Option<usize>) -> Result<SweepOutcome> {
    let cfg = ExperimentConfig::from_raw(raw)?;
    let sweep = cfg.sweep.ok_or_else(|| Error::Config {
        line: 0,
        field: "sweep".into(),
        reason: "the sweep command needs a [sweep] section with axis and grid".into(),
    })?;
    let configs = sweep
        .grid
        .iter()
        .map(|value| {
            let mut point = raw.clone();
            point.set(&format!("{}={value}", sweep.axis))?;
            ExperimentConfig::from_raw(&point)
        })
        .collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter {
            name: "jobs",
            reason: e.to_string(),
        })?;
    let summaries: Vec<Result<Summary>> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| execute(c).map(|a| a.summary))
            .collect()
    });
    let points = sweep
        .grid
        .into_iter()
        .zip(summaries)
        .map(|(v, s)| s.map(|s| (v, s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome { axis: sweep.axis, points })
}

/// One line of the gate check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateCheckRow {
    pub label: String,
    pub theta0: f64,
    pub phi0: f64,
    pub gamma_plus: f64,
    pub distance: f64,
    pub global_phase: f64,
    pub pass: bool,
}

pub const GATECHECK_TOLERANCE: f64 = 1e-10;

/// The seven catalogue gates, with the controlled phase at γ = π.
pub fn table1_specs() -> Result<Vec<GateSpec>> {
    TABLE1_LABELS
        .iter()
        .map(|&label| match label {
            "CPHASE" => controlled_phase_spec(std::f64::consts::PI).map(|s| GateSpec {
                label: "CPHASE(pi)".into(),
                ..s
            }),
            other => table1(other),
        })
        .collect()
}

/// Compares each spec's closed-form loop unitary with its target.
pub fn gatecheck_rows(specs: &[GateSpec]) -> Result<Vec<GateCheckRow>> {
    specs
        .iter()
        .map(|spec| {
            let distance = distance_up_to_phase(&spec.realized(), &spec.target)?;
            Ok(GateCheckRow {
                label: spec.label.clone(),
                theta0: spec.theta0,
                phi0: spec.phi0,
                gamma_plus: spec.gamma_plus,
                distance,
                global_phase: spec.global_phase,
                pass: distance <= GATECHECK_TOLERANCE,
            })
        })
        .collect()
}

pub fn gatecheck_table(rows: &[GateCheckRow]) -> String {
    let mut out = format!(
        "{:<12} {:>10} {:>10} {:>10} {:>12} {:>13}  result\n",
        "gate", "theta0", "phi0", "gamma_plus", "distance", "global_phase"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:>10.6} {:>10.6} {:>10.6} {:>12.3e} {:>13.6}  {}",
            r.label,
            r.theta0,
            r.phi0,
            r.gamma_plus,
            r.distance,
            r.global_phase,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    out
}
