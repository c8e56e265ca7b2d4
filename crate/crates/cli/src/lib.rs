//! Experiment runner for the `infodyn` toolkit.
//!
//! Reads a JSON [`ExperimentConfig`], runs the named experiment and writes
//! `result.json` (the full [`ResultRecord`]) and `result.csv` (the flat
//! per-step table). Failures map to exit codes via [`CliError::exit_code`]:
//! 1 for configuration and input errors, 2 for problems without a finite
//! solution, 3 for solver non-convergence. No file is written on failure.

pub mod config;
pub mod error;
pub mod experiments;
pub mod record;
pub mod sample;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Experiment, ExperimentConfig, Mode, CATALOG};
pub use error::{CliError, CliResult};
pub use record::{Outcome, ResultRecord, Table};

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(m) = self.mode {
            config.mode = m;
        }
        if let Some(o) = &self.out {
            config.out = Some(o.clone());
        }
    }
}

/// Validates and runs a config, returning the record without touching disk.
pub fn execute(config: &ExperimentConfig) -> CliResult<ResultRecord> {
    let experiment = config.validate()?;
    let start = Instant::now();
    let outcome = experiments::run(config, &experiment)?;
    ResultRecord::new(config, outcome, start.elapsed().as_secs_f64())
}

/// Reads, runs and writes; returns the record and the output directory.
pub fn run_file(path: &Path, overrides: &Overrides) -> CliResult<(ResultRecord, PathBuf)> {
    let text = std::fs::read_to_string(path)?;
    let mut config = ExperimentConfig::parse(&text)?;
    overrides.apply(&mut config);
    let record = execute(&config)?;
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
    record.write(&dir)?;
    Ok((record, dir))
}

/// The canned experiment table, one `name  description` line each.
pub fn list_experiments() -> String {
    let width = CATALOG.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    CATALOG.iter().map(|(n, d)| format!("{n:width$}  {d}\n")).collect()
}

/// Pretty JSON template for a canned experiment.
pub fn template(name: &str) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(&ExperimentConfig::template(name)?)? + "\n")
}
