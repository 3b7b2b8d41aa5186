//! The `holo` command-line front end.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, Mode, RawConfig};
pub use run::{execute, gatecheck_rows, run_sweep, table1_specs, write_artifacts, Artifacts, GateCheckRow, Summary};

use crate::error::{Error, Result};
use crate::schedule::{audit, Schedule};

#[derive(Debug, Parser)]
#[command(name = "holo", version, about = "Pulse-accelerated adiabatic holonomic gate simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan, audit and simulate one experiment.
    Simulate {
        config: PathBuf,
        /// `section.key=value` override; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory, overriding `experiment.output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the experiment over the configured sweep grid.
    Sweep {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check every catalogue gate against its canonical matrix.
    Gatecheck {
        /// Print the rows as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Phase-integral and slow-ramp adiabaticity tables.
    Adiabaticity {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Audit a schedule text file.
    Audit { schedule: PathBuf },
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn load(path: &PathBuf, overrides: &[String]) -> Result<RawConfig> {
    let text = fs::read_to_string(path)?;
    let mut raw = RawConfig::parse(&text)?;
    for o in overrides {
        raw.set(o)?;
    }
    Ok(raw)
}

fn output_dir(cfg: &ExperimentConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| cfg.output.clone())
}

fn simulate(config: PathBuf, overrides: Vec<String>, output: Option<PathBuf>, require: Option<Mode>) -> Result<bool> {
    let raw = load(&config, &overrides)?;
    let cfg = ExperimentConfig::from_raw(&raw)?;
    if let Some(mode) = require {
        if cfg.mode != mode {
            return Err(Error::Config {
                line: raw.get("experiment.mode").map_or(0, |x| x.1),
                field: "experiment.mode".into(),
                reason: format!("this command needs mode = {}", mode.as_str()),
            });
        }
    }
    let artifacts = execute(&cfg)?;
    let dir = output_dir(&cfg, output);
    write_artifacts(&dir, &artifacts)?;
    emit(&(serde_json::to_string_pretty(&artifacts.summary)? + "\n"));
    Ok(true)
}

fn sweep(config: PathBuf, overrides: Vec<String>, output: Option<PathBuf>, jobs: Option<usize>) -> Result<bool> {
    let raw = load(&config, &overrides)?;
    let cfg = ExperimentConfig::from_raw(&raw)?;
    let outcome = run_sweep(&raw, jobs)?;
    let dir = output_dir(&cfg, output);
    fs::create_dir_all(&dir)?;
    let csv = outcome.csv();
    fs::write(dir.join(run::SWEEP_CSV_FILE), &csv)?;
    let summaries: Vec<_> = outcome
        .points
        .iter()
        .map(|(value, summary)| serde_json::json!({ "axis": outcome.axis, "value": value, "summary": summary }))
        .collect();
    fs::write(dir.join(run::SWEEP_JSON_FILE), serde_json::to_string_pretty(&summaries)? + "\n")?;
    emit(&csv);
    Ok(true)
}

fn gatecheck(json: bool) -> Result<bool> {
    let rows = gatecheck_rows(&table1_specs()?)?;
    if json {
        emit(&(serde_json::to_string_pretty(&rows)? + "\n"));
    } else {
        emit(&run::gatecheck_table(&rows));
    }
    Ok(rows.iter().all(|r| r.pass))
}

fn audit_file(path: PathBuf) -> Result<bool> {
    let schedule = Schedule::from_text(&fs::read_to_string(&path)?)?;
    let report = audit(&schedule);
    let mut text = format!(
        "duration {:.6e} s, total area {:.9}, area mod 2pi {:.3e}, gamma_plus {:.9}\n",
        report.duration, report.total_area, report.area_mod_2pi, report.gamma_plus
    );
    for (step, area) in &report.step_areas {
        text += &format!("  step {step}: area {area:.9}\n");
    }
    for v in &report.violations {
        text += &format!("violation: {v}\n");
    }
    text += if report.is_clean() { "audit clean\n" } else { "audit FAILED\n" };
    emit(&text);
    Ok(report.is_clean())
}

/// Runs a parsed command; `Ok(false)` means the command ran but found a
/// failure (a gate out of tolerance, an unclean audit).
pub fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Simulate { config, overrides, output } => simulate(config, overrides, output, None),
        Command::Sweep {
            config,
            overrides,
            output,
            jobs,
        } => sweep(config, overrides, output, jobs),
        Command::Gatecheck { json } => gatecheck(json),
        Command::Adiabaticity { config, overrides, output } => simulate(config, overrides, output, Some(Mode::Adiabaticity)),
        Command::Audit { schedule } => audit_file(schedule),
    }
}

/// Exit status: 0 on success, 1 when a check fails, 2 on configuration or
/// input errors.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::ScheduleParse { .. } | Error::Io(_) | Error::UnknownGate(_) | Error::InvalidParameter { .. } => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}
