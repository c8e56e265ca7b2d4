//! Result records and their on-disk form.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::config::{ExperimentConfig, Mode};
use crate::error::CliResult;

/// Tabular output of an experiment: the first two columns are always `step`
/// and `t`; an empty cell means "not applicable".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new<S: Into<String>>(value_columns: impl IntoIterator<Item = S>) -> Self {
        let columns = ["step".to_string(), "t".to_string()]
            .into_iter()
            .chain(value_columns.into_iter().map(Into::into))
            .collect();
        Self { columns, rows: Vec::new() }
    }

    /// Appends a row; `values` are the cells after `step` and `t`.
    pub fn push(&mut self, step: usize, t: f64, values: impl IntoIterator<Item = Option<f64>>) {
        let mut row = vec![Some(step as f64), Some(t)];
        row.extend(values);
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// What an experiment runner produces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub table: Option<Table>,
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn summarize(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), value);
    }
}

/// The full record written to `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    /// SHA-256 of the canonical JSON of the effective config.
    pub input_digest: String,
    pub seed: u64,
    pub mode: Mode,
    pub gamma: f64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub wall_time_seconds: f64,
}

impl ResultRecord {
    pub fn new(config: &ExperimentConfig, outcome: Outcome, wall_time_seconds: f64) -> CliResult<Self> {
        let table = outcome.table.unwrap_or_else(|| Table::new(Vec::<String>::new()));
        Ok(Self {
            experiment: config.experiment.clone(),
            input_digest: digest(config)?,
            seed: config.seed,
            mode: config.mode,
            gamma: config.gamma,
            columns: table.columns,
            rows: table.rows,
            summary: outcome.summary,
            notes: outcome.notes,
            wall_time_seconds,
        })
    }

    /// The flat CSV body; cells use the shortest round-trip decimal form.
    pub fn csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default())).map_err(csv_error)?;
        }
        w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
    }

    /// Writes `result.json` and `result.csv` into `dir`, each atomically.
    pub fn write(&self, dir: &Path) -> CliResult<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = self.csv()?;
        let mut json = serde_json::to_vec_pretty(self)?;
        json.push(b'\n');
        let json_path = dir.join("result.json");
        let csv_path = dir.join("result.csv");
        atomic_write(dir, &json_path, &json)?;
        atomic_write(dir, &csv_path, &csv)?;
        Ok((json_path, csv_path))
    }
}

fn csv_error(e: csv::Error) -> crate::error::CliError {
    std::io::Error::other(e.to_string()).into()
}

fn atomic_write(dir: &Path, path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Digest of the config with `out` removed, so the same inputs written to
/// different directories share a digest.
pub fn digest(config: &ExperimentConfig) -> CliResult<String> {
    let mut canonical = config.clone();
    canonical.out = None;
    let bytes = serde_json::to_vec(&serde_json::to_value(&canonical)?)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
