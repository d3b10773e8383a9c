//! CSV tables and the JSON run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Observable, ScenarioConfig};
use super::engine::RunResult;
use super::RunError;

/// Lossless text for a float: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents).map_err(|e| RunError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| RunError::io(path, e))
}

fn scalar_csv(rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut s = String::from("t,value\n");
    for (t, v) in rows {
        let _ = writeln!(s, "{},{}", fmt_float(t), fmt_float(v));
    }
    s
}

/// `(file name, contents)` for every recorded observable.
pub fn render_tables(result: &RunResult) -> Vec<(String, String)> {
    let c = &result.config;
    let mut files = Vec::new();
    for obs in &c.observables {
        match obs {
            Observable::Profile => {
                let mut s = String::from("t,site,value\n");
                for sample in &result.samples {
                    for (i, z) in sample.z.iter().enumerate() {
                        let _ = writeln!(s, "{},{},{}", fmt_float(sample.t), i + 1, fmt_float(0.5 * z));
                    }
                }
                files.push(("profile.csv".into(), s));
            }
            Observable::Inhomogeneity => {
                let mut s = String::from("t,k,delta\n");
                for p in result.inhomogeneity() {
                    for (k, d) in p.values.iter().enumerate() {
                        let _ = writeln!(s, "{},{},{}", fmt_float(p.t), k + 1, fmt_float(*d));
                    }
                }
                files.push(("inhomogeneity.csv".into(), s));
            }
            Observable::Amplitudes => {
                if let Some((plus, minus)) = result.amplitudes() {
                    let times = result.times();
                    files.push(("amplitude_plus.csv".into(), scalar_csv(times.iter().copied().zip(plus))));
                    files.push(("amplitude_minus.csv".into(), scalar_csv(times.iter().copied().zip(minus))));
                }
            }
            Observable::Entropy => files.push(("entropy.csv".into(), scalar_csv(result.entropy()))),
            Observable::TraceDistance => {
                files.push(("trace_distance.csv".into(), scalar_csv(result.scalar(|s| s.trace_distance))))
            }
            Observable::Energy => files.push(("energy.csv".into(), scalar_csv(result.scalar(|s| s.energy)))),
            Observable::Blockade => files.push(("blockade.csv".into(), scalar_csv(result.scalar(|s| Some(s.max_nn))))),
            Observable::Discarded => {
                files.push(("discarded.csv".into(), scalar_csv(result.scalar(|s| Some(s.discarded)))))
            }
            Observable::BondDim => {
                files.push(("bond_dim.csv".into(), scalar_csv(result.scalar(|s| Some(s.bond_dim as f64)))))
            }
        }
    }
    files
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// Everything needed to repeat a run and judge its accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: RunStatus,
    pub error: Option<String>,
    pub config: ScenarioConfig,
    /// The same configuration in the input file format.
    pub config_text: String,
    pub engine_version: String,
    pub steps_completed: usize,
    pub samples: usize,
    pub discarded_weight: f64,
    pub max_bond_dim: usize,
    pub wall_clock_seconds: f64,
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(result: &RunResult, error: Option<&RunError>, files: Vec<String>) -> Self {
        Self {
            status: if error.is_some() { RunStatus::Failed } else { RunStatus::Ok },
            error: error.map(|e| e.to_string()),
            config: result.config.clone(),
            config_text: result.config.to_text(),
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            steps_completed: result.steps_completed,
            samples: result.samples.len(),
            discarded_weight: result.discarded_weight(),
            max_bond_dim: result.max_bond_dim(),
            wall_clock_seconds: result.wall_clock_seconds,
            files,
            notes: vec!["profiles cover every site including the boundaries; cropping is left to plotting".into()],
        }
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| RunError::Manifest(format!("{}: {e}", path.display())))
    }
}

/// Writes the tables and manifest of `result` into its output directory.
pub fn persist(result: &RunResult, error: Option<&RunError>) -> Result<PathBuf, RunError> {
    let dir = &result.config.output;
    let tables = render_tables(result);
    for (name, contents) in &tables {
        write_atomic(&dir.join(name), contents.as_bytes())?;
    }
    let manifest = RunManifest::new(result, error, tables.into_iter().map(|t| t.0).collect());
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| RunError::Manifest(e.to_string()))?;
    let path = dir.join("manifest.json");
    write_atomic(&path, json.as_bytes())?;
    Ok(path)
}
