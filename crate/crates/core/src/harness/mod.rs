//! Experiment presets, configuration, manifests and output files.

pub mod config;
pub mod csv;
mod presets;

pub use presets::{compare_order_parameters, phase_point, CompareRow, PhasePoint};

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

pub use crate::fit::{fit_rate, FitMode, RateFit};
pub use config::{parse_config, read_config_file, ExperimentConfig, Params, Preset};
pub use csv::{format_g17, CsvWriter};

/// Process exit codes of the command-line front end.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const ASSERTION: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] crate::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        use crate::Error as E;
        match self {
            HarnessError::Config(_) => exit::CONFIG,
            HarnessError::Assertion(_) => exit::ASSERTION,
            HarnessError::Io(_) => exit::IO,
            HarnessError::Core(e) => match e {
                E::Io(_) => exit::IO,
                E::InvalidGrid(_) | E::InvalidParameter { .. } | E::GridMismatch { .. } => exit::CONFIG,
                _ => exit::ASSERTION,
            },
        }
    }
}

/// Outcome of one built-in check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Whether a failure makes the run fail.
    pub assertion: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub preset: &'static str,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl RunReport {
    fn new(preset: Preset) -> Self {
        Self { preset: preset.name(), files: Vec::new(), checks: Vec::new() }
    }

    fn check(&mut self, name: &str, passed: bool, assertion: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, assertion, detail });
    }

    pub fn failed_assertions(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.assertion && !c.passed).collect()
    }
}

/// Sizes the global worker pool from `VICSEK_THREADS` when set. Returns the
/// number of threads in use.
pub fn init_thread_pool() -> Result<usize, HarnessError> {
    if let Ok(v) = std::env::var("VICSEK_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| HarnessError::Config(format!("VICSEK_THREADS = `{v}` is not a positive integer")))?;
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

/// Writes `manifest.json`: the resolved configuration, code version and time.
pub fn write_manifest(
    dir: &Path,
    config: &ExperimentConfig,
    resolved: &std::collections::BTreeMap<String, String>,
) -> Result<PathBuf, HarnessError> {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = json!({
        "preset": config.preset.name(),
        "seed": config.seed,
        "out": config.out_dir,
        "parameters": resolved,
        "tolerances": config.tolerances,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp_unix": stamp,
    });
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| crate::Error::Format(e.to_string()))?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

/// Runs a preset: resolves parameters, writes the manifest, then the data.
/// Fails with [`HarnessError::Assertion`] when a built-in assertion fails;
/// the artifacts written so far are kept.
pub fn run_preset(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    std::fs::create_dir_all(&config.out_dir)?;
    let report = presets::dispatch(config)?;
    let summary = serde_json::to_string_pretty(&report).map_err(|e| crate::Error::Format(e.to_string()))?;
    std::fs::write(config.out_dir.join("summary.json"), summary + "\n")?;
    let failed = report.failed_assertions();
    if !failed.is_empty() {
        let names: Vec<String> = failed.iter().map(|c| format!("{} ({})", c.name, c.detail)).collect();
        return Err(HarnessError::Assertion(names.join("; ")));
    }
    Ok(report)
}
