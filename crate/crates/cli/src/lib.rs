//! Command-line front end: load a scenario, run the rolling horizon and
//! persist the results.

pub mod export;
pub mod manifest;
pub mod plots;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use sha2::{Digest, Sha256};
use thiserror::Error;

use tecoord::rolling::run_horizon;
use tecoord::scenario::{parse_scenario_str, validate_scenario, AdderMode};
use tecoord::solver::SolverOptions;
use tecoord::{HorizonResult, Scenario};

pub use manifest::RunManifest;

#[derive(Debug, Clone, Parser)]
#[command(name = "tecoord", version, about = "Rolling-window transactive energy simulation")]
pub struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Directory for CSV, manifest and plot output.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub window_hours: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_admm_iters: Option<usize>,
    #[arg(long)]
    pub max_te_rounds: Option<usize>,
    /// per_bus, broadcast_max or broadcast_mean.
    #[arg(long)]
    pub adder_mode: Option<AdderMode>,
    /// Also write SVG plots.
    #[arg(long)]
    pub emit_plots: bool,
}

impl Args {
    pub fn new(scenario: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario: scenario.into(),
            out_dir: out_dir.into(),
            window_hours: None,
            rho: None,
            eps: None,
            max_admm_iters: None,
            max_te_rounds: None,
            adder_mode: None,
            emit_plots: false,
        }
    }

    /// Applies the command-line overrides to the scenario configuration.
    pub fn apply_overrides(&self, s: &mut Scenario) {
        let c = &mut s.config;
        if let Some(v) = self.window_hours {
            c.window_hours = v;
        }
        if let Some(v) = self.rho {
            c.rho = v;
        }
        if let Some(v) = self.eps {
            c.eps = v;
        }
        if let Some(v) = self.max_admm_iters {
            c.max_admm_iters = v;
        }
        if let Some(v) = self.max_te_rounds {
            c.max_te_rounds = v;
        }
        if let Some(v) = self.adder_mode {
            c.adder_mode = v;
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Io(String),
    #[error("scenario is invalid:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("simulation failed: {0}")]
    Simulation(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) => 2,
            RunError::Io(_) | RunError::Simulation(_) => 1,
        }
    }
}

fn io_err(what: &str, path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Io(format!("{what} {}: {e}", path.display()))
}

/// A finished run.
#[derive(Debug)]
pub struct RunReport {
    pub scenario: Scenario,
    pub horizon: HorizonResult,
    pub manifest: RunManifest,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    /// 3 when some window ran out of negotiation rounds, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.horizon.any_flagged() {
            3
        } else {
            0
        }
    }
}

/// Reads, overrides and validates a scenario.
pub fn load_scenario(args: &Args) -> Result<(Scenario, String), RunError> {
    let bytes = fs::read(&args.scenario).map_err(|e| io_err("cannot read", &args.scenario, e))?;
    let hash = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes)
        .map_err(|e| RunError::Invalid(vec![format!("scenario is not UTF-8: {e}")]))?;
    let mut scenario: Scenario =
        parse_scenario_str(&text).map_err(|e| RunError::Invalid(vec![e.to_string()]))?;
    args.apply_overrides(&mut scenario);
    let violations = validate_scenario(&scenario);
    if !violations.is_empty() {
        return Err(RunError::Invalid(
            violations.iter().map(ToString::to_string).collect(),
        ));
    }
    Ok((scenario, hash))
}

/// Validates, runs the horizon and writes every output file.
pub fn run(args: &Args) -> Result<RunReport, RunError> {
    let started = chrono::Utc::now();
    let (scenario, hash) = load_scenario(args)?;
    let horizon = run_horizon(&scenario, &SolverOptions::default())
        .map_err(|e| RunError::Simulation(e.to_string()))?;
    fs::create_dir_all(&args.out_dir).map_err(|e| io_err("cannot create", &args.out_dir, e))?;
    let mut outputs = export::export_results(&horizon, &scenario, &args.out_dir)
        .map_err(|e| io_err("cannot write into", &args.out_dir, e))?;
    if args.emit_plots {
        outputs.extend(
            plots::emit_plots(&args.out_dir, (scenario.network.v_min_pu, scenario.network.v_max_pu))
                .map_err(|e| io_err("cannot plot into", &args.out_dir, e))?,
        );
    }
    let manifest = RunManifest::build(
        &args.scenario,
        hash,
        &scenario,
        &horizon,
        &outputs,
        started,
        chrono::Utc::now(),
    );
    let path = args.out_dir.join(manifest::MANIFEST_FILE);
    manifest
        .write(&path)
        .map_err(|e| io_err("cannot write", &path, e))?;
    outputs.push(path);
    Ok(RunReport {
        scenario,
        horizon,
        manifest,
        outputs,
    })
}

/// Runs and maps the result to a process exit code, reporting on stderr.
pub fn main_with_args(args: &Args) -> i32 {
    match run(args) {
        Ok(report) => {
            let code = report.exit_code();
            if code != 0 {
                for w in report.horizon.windows.iter().filter(|w| w.flagged) {
                    eprintln!(
                        "window {} (hours {}..{}) ended {} after {} rounds with {} violations",
                        w.index,
                        w.hours.start,
                        w.hours.end,
                        w.status(),
                        w.outcomes.len(),
                        w.residual_violations.len()
                    );
                }
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
