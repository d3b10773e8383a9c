//! Config-driven runs: single scenarios, drive-frequency sweeps and the
//! two-wall collision comparison, persisted as CSV tables plus a manifest.

mod config;
mod engine;
mod output;
mod presets;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    CollisionConfig, ConfigError, EngineKind, InitialState, Observable, ScenarioConfig, SweepConfig, MAX_BLOCK_SITES,
    MAX_EXACT_DIM,
};
pub use engine::{simulate, simulate_with, RunResult, Sample};
pub use output::{fmt_float, render_tables, write_atomic, RunManifest, RunStatus};
pub use presets::{collision_preset, preset_text, scenario_preset, sweep_preset, PresetKind, PRESETS};

use crate::exact::ExactError;
use crate::mps::MpsError;
use crate::observables::ObservableError;
use crate::operators::OperatorError;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{failed} of {total} runs failed")]
    PartialFailure { failed: usize, total: usize },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl RunError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    /// Process exit status: 1 for a bad configuration, 2 for anything that
    /// went wrong while computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            _ => 2,
        }
    }
}

/// Runs one scenario and writes its tables and manifest. The manifest is
/// written (marked failed) even when the engine gives up part way.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunResult, RunError> {
    run_scenario_with(config, |_| {})
}

/// [`run_scenario`] with a callback after every sample.
pub fn run_scenario_with(config: &ScenarioConfig, progress: impl FnMut(&Sample)) -> Result<RunResult, RunError> {
    config.validate()?;
    let (result, error) = simulate_with(config, progress);
    output::persist(&result, error.as_ref())?;
    match error {
        None => Ok(result),
        Some(e) => Err(e),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, RunError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))
}

/// Outcome of one grid point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub gamma: f64,
    pub status: RunStatus,
    pub error: Option<String>,
    /// `(t, S)` of the half-chain entropy.
    pub entropy: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    /// Entropy at `t` for each grid point that reached it.
    pub fn entropy_at(&self, t: f64) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.entropy.iter().find(|e| (e.0 - t).abs() < 1e-9).map(|e| (p.gamma, e.1)))
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.status == RunStatus::Failed).count()
    }
}

/// Runs every grid point (up to `workers` at once), each into its own
/// directory, then tabulates the entropies. A failed point is recorded and
/// the others carry on.
pub fn run_sweep(sweep: &SweepConfig, workers: usize) -> Result<SweepReport, RunError> {
    sweep.validate()?;
    let points: Vec<SweepPoint> = pool(workers)?.install(|| {
        sweep
            .gammas
            .par_iter()
            .map(|&gamma| {
                let config = sweep.point(gamma);
                let (result, mut error) = simulate_with(&config, |_| {});
                if let Err(e) = output::persist(&result, error.as_ref()) {
                    error.get_or_insert(e);
                }
                SweepPoint {
                    gamma,
                    status: if error.is_some() { RunStatus::Failed } else { RunStatus::Ok },
                    error: error.map(|e| e.to_string()),
                    entropy: result.entropy(),
                }
            })
            .collect()
    });
    let report = SweepReport { config: sweep.clone(), points };
    let dir = &sweep.base.output;
    // rows are the per-run entropy rows with the frequency prepended
    let mut long = String::from("gamma,t,value\n");
    for p in &report.points {
        for &(t, s) in &p.entropy {
            let _ = writeln!(long, "{},{},{}", fmt_float(p.gamma), fmt_float(t), fmt_float(s));
        }
    }
    write_atomic(&dir.join("sweep_entropy.csv"), long.as_bytes())?;
    let mut reduced = String::from("t,gamma,value\n");
    for &t in &sweep.report_times {
        for (g, s) in report.entropy_at(t) {
            let _ = writeln!(reduced, "{},{},{}", fmt_float(t), fmt_float(g), fmt_float(s));
        }
    }
    write_atomic(&dir.join("sweep_report.csv"), reduced.as_bytes())?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| RunError::Manifest(e.to_string()))?;
    write_atomic(&dir.join("sweep_manifest.json"), json.as_bytes())?;
    Ok(report)
}

/// Both runs of a collision comparison and their trace distances on the
/// shared sample grid.
#[derive(Clone, Debug)]
pub struct CollisionReport {
    pub baseline: RunResult,
    pub double: RunResult,
    pub times: Vec<f64>,
    pub baseline_distance: Vec<f64>,
    pub double_distance: Vec<f64>,
}

impl CollisionReport {
    /// `double - baseline`.
    pub fn difference(&self) -> Vec<f64> {
        self.double_distance.iter().zip(&self.baseline_distance).map(|(a, b)| a - b).collect()
    }
}

/// Runs the two-wall scenario and its one-wall baseline and writes
/// `trace_distance_pair.csv` with columns `t,baseline,double,difference`.
pub fn run_collision_pair(pair: &CollisionConfig, workers: usize) -> Result<CollisionReport, RunError> {
    pair.validate()?;
    let configs = [pair.baseline_config(), pair.double_config()];
    let mut runs: Vec<Result<RunResult, RunError>> =
        pool(workers)?.install(|| configs.par_iter().map(run_scenario).collect());
    let double = runs.pop().expect("two runs")?;
    let baseline = runs.pop().expect("two runs")?;
    let times = baseline.times();
    let baseline_distance: Vec<f64> = baseline.samples.iter().map(|s| s.trace_distance.unwrap_or(f64::NAN)).collect();
    let double_distance: Vec<f64> = double.samples.iter().map(|s| s.trace_distance.unwrap_or(f64::NAN)).collect();
    let report = CollisionReport { baseline, double, times, baseline_distance, double_distance };
    let mut csv = String::from("t,baseline,double,difference\n");
    for (i, d) in report.difference().iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_float(report.times[i]),
            fmt_float(report.baseline_distance[i]),
            fmt_float(report.double_distance[i]),
            fmt_float(*d)
        );
    }
    write_atomic(&pair.base.output.join("trace_distance_pair.csv"), csv.as_bytes())?;
    Ok(report)
}
