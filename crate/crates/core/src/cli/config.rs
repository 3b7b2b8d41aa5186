//! Experiment configuration files.
//!
//! The format is flat `key = value` lines grouped under `[section]` headers;
//! `#` starts a comment. Frequencies are written in MHz and converted once,
//! at parse time, to angular frequency: `ω [rad/s] = 2π × 10⁶ × f [MHz]`.
//! Times are written in ns. Every key can be overridden from the command
//! line as `section.key=value`.
//!
//! ```text
//! [experiment]
//! mode = single-qubit        # two-qubit-effective | two-qubit-full | toggling | adiabaticity
//! gate = H                   # catalogue label, or `theta0, phi0, gamma_plus`
//! initial = auto             # auto | 0 | 1 | e | + | 10 | 11 | rr | 00 | 01
//! output = out/h
//! trace_rows = 512
//!
//! [drive]
//! omega_mhz = 10             # burst Ω (single qubit) or Ω₁₁ (two qubits)
//! delta_ratio = 38           # Δ / Ω₁₁
//! n_per_step = 5             # one value, or five comma-separated values
//! ramp_ns = 25               # sweep time per step
//! substep_ns = 0.01          # optional initial substep
//! drive = burst              # burst | continuous
//! v12 = envelope             # envelope | fixed
//! quantize_gaps = auto       # auto | true | false
//!
//! [sweep]
//! axis = drive.omega_mhz
//! grid = 5, 10, 20
//!
//! [adiabaticity]
//! toy = 8pi, 40pi            # phase rates τΔE of the toy integrand
//! omega_tau = 20, 200, 2000  # Ωτ of a flip-free θ ramp
//! theta_span = pi/2
//! ```

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::gates::parse_angle;
use crate::schedule::DriveMode;

/// Conversion of a frequency in MHz to rad/s.
pub const RAD_PER_S_PER_MHZ: f64 = TAU * 1e6;

/// Line number reported for values supplied on the command line.
pub const COMMAND_LINE: usize = 0;

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("experiment", &["mode", "gate", "initial", "output", "trace_rows"]),
    (
        "drive",
        &[
            "omega_mhz",
            "delta_ratio",
            "n_per_step",
            "ramp_ns",
            "substep_ns",
            "drive",
            "v12",
            "quantize_gaps",
        ],
    ),
    ("sweep", &["axis", "grid"]),
    ("adiabaticity", &["toy", "omega_tau", "theta_span"]),
];

fn is_known(key: &str) -> bool {
    key.split_once('.').is_some_and(|(section, name)| {
        KNOWN_KEYS
            .iter()
            .any(|(s, names)| *s == section && names.contains(&name))
    })
}

/// `section.key → (value, line)` as read from a file plus overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| Error::Config {
                    line,
                    field: content.to_string(),
                    reason: "section header must end with `]`".into(),
                })?;
                let name = name.trim().to_string();
                if !KNOWN_KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(Error::Config {
                        line,
                        field: name,
                        reason: "unknown section".into(),
                    });
                }
                section = Some(name);
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                field: content.to_string(),
                reason: "expected `key = value`".into(),
            })?;
            let section = section.as_deref().ok_or_else(|| Error::Config {
                line,
                field: key.trim().to_string(),
                reason: "key appears before any [section] header".into(),
            })?;
            let full = format!("{section}.{}", key.trim());
            if !is_known(&full) {
                return Err(Error::Config {
                    line,
                    field: full,
                    reason: "unknown key".into(),
                });
            }
            if entries.insert(full.clone(), (value.trim().to_string(), line)).is_some() {
                return Err(Error::Config {
                    line,
                    field: full,
                    reason: "key given twice".into(),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Applies a `section.key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| Error::Config {
            line: COMMAND_LINE,
            field: assignment.to_string(),
            reason: "override must read `section.key=value`".into(),
        })?;
        let key = key.trim();
        if !is_known(key) {
            return Err(Error::Config {
                line: COMMAND_LINE,
                field: key.to_string(),
                reason: "unknown key".into(),
            });
        }
        self.entries
            .insert(key.to_string(), (value.trim().to_string(), COMMAND_LINE));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SingleQubit,
    TwoQubitEffective,
    TwoQubitFull,
    Toggling,
    Adiabaticity,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SingleQubit => "single-qubit",
            Mode::TwoQubitEffective => "two-qubit-effective",
            Mode::TwoQubitFull => "two-qubit-full",
            Mode::Toggling => "toggling",
            Mode::Adiabaticity => "adiabaticity",
        }
    }

    pub fn is_two_qubit(self) -> bool {
        matches!(self, Mode::TwoQubitEffective | Mode::TwoQubitFull)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateChoice {
    Label(String),
    Parameters { theta0: f64, phi0: f64, gamma_plus: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum V12Choice {
    Envelope,
    FixedAtPeak,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: String,
    pub grid: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticitySpec {
    pub toy: Vec<f64>,
    pub omega_tau: Vec<f64>,
    pub theta_span: f64,
}

/// A validated experiment description, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub gate: GateChoice,
    /// `None` selects the mode default.
    pub n_per_step: Option<[usize; 5]>,
    /// Burst Ω for one qubit, Ω₁₁ for two, in rad/s.
    pub omega: f64,
    pub delta_ratio: f64,
    /// Sweep time per loop step, in seconds.
    pub ramp: f64,
    pub substep: Option<f64>,
    pub initial: String,
    pub output: PathBuf,
    pub trace_rows: usize,
    pub drive: DriveMode,
    pub v12: V12Choice,
    /// `None` selects the mode default.
    pub quantize_gaps: Option<bool>,
    pub sweep: Option<SweepSpec>,
    pub adiabaticity: AdiabaticitySpec,
}

fn field_error(key: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::Config {
        line,
        field: key.to_string(),
        reason: reason.into(),
    }
}

fn number(raw: &RawConfig, key: &str, default: f64, positive: bool) -> Result<f64> {
    let Some((text, line)) = raw.get(key) else {
        return Ok(default);
    };
    let v: f64 = text
        .parse()
        .map_err(|_| field_error(key, line, format!("`{text}` is not a number")))?;
    if !v.is_finite() || (positive && v <= 0.0) {
        return Err(field_error(key, line, format!("must be a positive finite number, got {text}")));
    }
    Ok(v)
}

fn list(raw: &RawConfig, key: &str) -> Result<Option<(Vec<String>, usize)>> {
    let Some((text, line)) = raw.get(key) else {
        return Ok(None);
    };
    let items: Vec<String> = text
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(field_error(key, line, "list must not be empty"));
    }
    Ok(Some((items, line)))
}

fn angles(raw: &RawConfig, key: &str) -> Result<Option<Vec<f64>>> {
    let Some((items, line)) = list(raw, key)? else {
        return Ok(None);
    };
    items
        .iter()
        .map(|s| parse_angle(s).ok_or_else(|| field_error(key, line, format!("`{s}` is not a number or multiple of pi"))))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let (mode_text, mode_line) = raw
            .get("experiment.mode")
            .ok_or_else(|| field_error("experiment.mode", COMMAND_LINE, "required"))?;
        let mode = match mode_text {
            "single-qubit" => Mode::SingleQubit,
            "two-qubit-effective" => Mode::TwoQubitEffective,
            "two-qubit-full" => Mode::TwoQubitFull,
            "toggling" => Mode::Toggling,
            "adiabaticity" => Mode::Adiabaticity,
            other => return Err(field_error("experiment.mode", mode_line, format!("unknown mode `{other}`"))),
        };

        let gate = match raw.get("experiment.gate") {
            None if mode == Mode::Adiabaticity => GateChoice::Label("X".into()),
            None => return Err(field_error("experiment.gate", mode_line, format!("required in {} mode", mode.as_str()))),
            Some((text, line)) if text.contains(',') && !text.contains('(') => {
                let parts = angles(raw, "experiment.gate")?.unwrap_or_default();
                let [theta0, phi0, gamma_plus] = parts[..] else {
                    return Err(field_error("experiment.gate", line, "expected `theta0, phi0, gamma_plus`"));
                };
                GateChoice::Parameters { theta0, phi0, gamma_plus }
            }
            Some((text, _)) => GateChoice::Label(text.to_string()),
        };

        let n_per_step = match list(raw, "drive.n_per_step")? {
            None => None,
            Some((items, line)) => {
                let counts = items
                    .iter()
                    .map(|s| match s.parse::<usize>() {
                        Ok(n) if n > 0 => Ok(n),
                        _ => Err(field_error("drive.n_per_step", line, format!("`{s}` is not a positive integer"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                match counts[..] {
                    [n] => Some([n; 5]),
                    [a, b, c, d, e] => Some([a, b, c, d, e]),
                    _ => return Err(field_error("drive.n_per_step", line, "give one count or five")),
                }
            }
        };

        let drive = match raw.get("drive.drive") {
            None | Some(("burst", _)) => DriveMode::Burst,
            Some(("continuous", _)) => DriveMode::Continuous,
            Some((other, line)) => return Err(field_error("drive.drive", line, format!("expected burst or continuous, got `{other}`"))),
        };
        let v12 = match raw.get("drive.v12") {
            None | Some(("envelope", _)) => V12Choice::Envelope,
            Some(("fixed", _)) => V12Choice::FixedAtPeak,
            Some((other, line)) => return Err(field_error("drive.v12", line, format!("expected envelope or fixed, got `{other}`"))),
        };
        let quantize_gaps = match raw.get("drive.quantize_gaps") {
            None | Some(("auto", _)) => None,
            Some(("true", _)) => Some(true),
            Some(("false", _)) => Some(false),
            Some((other, line)) => return Err(field_error("drive.quantize_gaps", line, format!("expected auto, true or false, got `{other}`"))),
        };

        let substep = if raw.contains("drive.substep_ns") {
            Some(number(raw, "drive.substep_ns", 0.0, true)? * 1e-9)
        } else {
            None
        };
        let trace_rows = match raw.get("experiment.trace_rows") {
            None => 512,
            Some((text, line)) => text
                .parse()
                .map_err(|_| field_error("experiment.trace_rows", line, format!("`{text}` is not a non-negative integer")))?,
        };

        let sweep = match (raw.get("sweep.axis"), list(raw, "sweep.grid")) {
            (None, Ok(None)) => None,
            (Some((axis, line)), Ok(Some((grid, _)))) => {
                if !is_known(axis) || axis.starts_with("sweep.") {
                    return Err(field_error("sweep.axis", line, format!("`{axis}` is not a sweepable key")));
                }
                Some(SweepSpec {
                    axis: axis.to_string(),
                    grid,
                })
            }
            (Some((_, line)), Ok(None)) => return Err(field_error("sweep.grid", line, "a sweep needs a non-empty grid")),
            (None, Ok(Some((_, line)))) => return Err(field_error("sweep.axis", line, "a sweep grid needs an axis")),
            (_, Err(e)) => return Err(e),
        };

        let adiabaticity = AdiabaticitySpec {
            toy: angles(raw, "adiabaticity.toy")?.unwrap_or_else(|| vec![8.0 * std::f64::consts::PI, 40.0 * std::f64::consts::PI]),
            omega_tau: angles(raw, "adiabaticity.omega_tau")?.unwrap_or_else(|| vec![20.0, 63.2, 200.0, 632.5, 2000.0]),
            theta_span: match angles(raw, "adiabaticity.theta_span")? {
                None => std::f64::consts::FRAC_PI_2,
                Some(v) if v.len() == 1 => v[0],
                Some(_) => {
                    let line = raw.get("adiabaticity.theta_span").map_or(COMMAND_LINE, |x| x.1);
                    return Err(field_error("adiabaticity.theta_span", line, "expected one angle"));
                }
            },
        };
        if let Some((_, line)) = raw.get("adiabaticity.omega_tau") {
            if adiabaticity.omega_tau.iter().any(|&x| !(x > 0.0)) {
                return Err(field_error("adiabaticity.omega_tau", line, "values must be positive"));
            }
        }

        Ok(Self {
            mode,
            gate,
            n_per_step,
            omega: number(raw, "drive.omega_mhz", 10.0, true)? * RAD_PER_S_PER_MHZ,
            delta_ratio: number(raw, "drive.delta_ratio", 38.0, true)?,
            ramp: number(raw, "drive.ramp_ns", 25.0, true)? * 1e-9,
            substep,
            initial: raw.get("experiment.initial").map_or("auto", |x| x.0).to_string(),
            output: PathBuf::from(raw.get("experiment.output").map_or("holo-out", |x| x.0)),
            trace_rows,
            drive,
            v12,
            quantize_gaps,
            sweep,
            adiabaticity,
        })
    }
}
