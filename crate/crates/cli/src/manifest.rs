//! Run provenance written next to the CSV files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use tecoord::dso::{check_limits, LimitTolerances};
use tecoord::{HorizonResult, Scenario};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub horizon_hours: usize,
    pub window_hours: usize,
    pub window_step_hours: usize,
    pub rho: f64,
    pub eps: f64,
    pub dso_penalty_weight: f64,
    pub max_admm_iters: usize,
    pub max_te_rounds: usize,
    pub violation_tol_kw: f64,
    pub violation_tol_pu: f64,
    pub adder_mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub index: usize,
    pub start_hour: usize,
    pub end_hour: usize,
    pub rounds: usize,
    pub admm_iterations: usize,
    pub status: String,
    pub flagged: bool,
    pub violations_before: usize,
    pub violations_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario_path: String,
    pub scenario_sha256: String,
    pub scenario_name: String,
    pub config: ConfigSnapshot,
    pub started_at: String,
    pub finished_at: String,
    pub windows: Vec<WindowSummary>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn build(
        scenario_path: &Path,
        scenario_sha256: String,
        s: &Scenario,
        h: &HorizonResult,
        outputs: &[PathBuf],
        started: DateTime<Utc>,
        finished: DateTime<Utc>,
    ) -> Self {
        let c = &s.config;
        let tol = LimitTolerances {
            kw: c.violation_tol_kw,
            pu: c.violation_tol_pu,
        };
        let windows = h
            .windows
            .iter()
            .map(|w| WindowSummary {
                index: w.index,
                start_hour: w.hours.start,
                end_hour: w.hours.end,
                rounds: w.outcomes.len(),
                admm_iterations: w.admm_iterations(),
                status: w.status().to_string(),
                flagged: w.flagged,
                violations_before: w.outcomes[0].assessment.violations.len(),
                violations_after: check_limits(&w.grid_schedule, &s.network, &tol)
                    .map_or(0, |a| a.violations.len()),
            })
            .collect();
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario_path: scenario_path.display().to_string(),
            scenario_sha256,
            scenario_name: s.name.clone(),
            config: ConfigSnapshot {
                horizon_hours: c.horizon_hours,
                window_hours: c.window_hours,
                window_step_hours: c.window_step_hours,
                rho: c.rho,
                eps: c.eps,
                dso_penalty_weight: c.dso_penalty_weight,
                max_admm_iters: c.max_admm_iters,
                max_te_rounds: c.max_te_rounds,
                violation_tol_kw: c.violation_tol_kw,
                violation_tol_pu: c.violation_tol_pu,
                adder_mode: c.adder_mode.to_string(),
            },
            started_at: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: finished.to_rfc3339_opts(SecondsFormat::Millis, true),
            windows,
            outputs: outputs
                .iter()
                .filter_map(|p| p.file_name())
                .map(|n| n.to_string_lossy().into_owned())
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(io::Error::from)?;
        fs::write(path, text + "\n")
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(io::Error::from)
    }
}
