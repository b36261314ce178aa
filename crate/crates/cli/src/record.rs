//! Result records, their CSV views, and the content-addressed cache.

use crate::error::{CliError, Result};
use dlab_core::AbscissaEstimate;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

pub const SCHEMA: &str = "dlab.record.v1";

/// How `report` compares a quantity with its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|estimate - target| <= tol`
    Equal,
    /// `estimate <= target + 3 se`
    AtMost,
    /// `estimate >= target - 3 se`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub label: String,
    #[serde(with = "dlab_core::ext")]
    pub estimate: f64,
    pub standard_error: f64,
    #[serde(default, with = "dlab_core::ext::option")]
    pub target: Option<f64>,
    pub comparison: Comparison,
}

impl Quantity {
    pub fn new(label: impl Into<String>, estimate: f64) -> Self {
        Quantity {
            label: label.into(),
            estimate,
            standard_error: 0.0,
            target: None,
            comparison: Comparison::Equal,
        }
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.standard_error = se;
        self
    }

    pub fn target(mut self, target: Option<f64>, comparison: Comparison) -> Self {
        self.target = target;
        self.comparison = comparison;
        self
    }

    /// `None` when there is no target.
    pub fn passes(&self, tol: f64) -> Option<bool> {
        let t = self.target?;
        let slack = 3.0 * self.standard_error + 1e-12;
        Some(match self.comparison {
            Comparison::Equal => (self.estimate - t).abs() <= tol,
            Comparison::AtMost => self.estimate <= t + slack,
            Comparison::AtLeast => self.estimate >= t - slack,
        })
    }
}

/// One row of `table.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub series: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub norm: f64,
    pub standard_error: f64,
    #[serde(rename = "log_norm_over_log_N")]
    pub log_norm_over_log_n: f64,
}

impl TableRow {
    pub fn new(series: &str, n: u64, norm: f64, standard_error: f64) -> Self {
        TableRow {
            series: series.to_string(),
            n,
            norm,
            standard_error,
            log_norm_over_log_n: norm.ln() / (n as f64).ln(),
        }
    }

    pub fn from_estimate(series: &str, e: &AbscissaEstimate) -> Vec<TableRow> {
        e.schedule
            .iter()
            .zip(&e.norms)
            .map(|(&n, x)| TableRow::new(series, n, x.value, x.standard_error))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct PlotRow<'a> {
    series: &'a str,
    #[serde(rename = "log_N")]
    log_n: f64,
    log_norm: f64,
}

/// Summary of the validated input series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub sha256: String,
    pub kind: String,
    pub dim: usize,
    #[serde(with = "dlab_core::ext")]
    pub q: f64,
    pub n_max: u64,
    pub support: usize,
}

/// Everything a job produced. No wall-clock fields, so identical jobs give
/// identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema: String,
    pub command: String,
    pub content_hash: String,
    pub seed: u64,
    pub config: Value,
    pub input: Option<InputSummary>,
    pub quantities: Vec<Quantity>,
    pub estimates: Value,
    pub table: Vec<TableRow>,
}

pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(CliError::io(&tmp))?;
    fs::rename(&tmp, path).map_err(CliError::io(path))
}

pub fn record_bytes(record: &ResultRecord) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(record).expect("records serialize");
    bytes.push(b'\n');
    bytes
}

fn table_csv(rows: &[TableRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["series", "N", "norm", "standard_error", "log_norm_over_log_N"])
            .expect("in-memory write");
    }
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

fn plot_csv(rows: &[TableRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["series", "log_N", "log_norm"]).expect("in-memory write");
    }
    for r in rows {
        w.serialize(PlotRow {
            series: &r.series,
            log_n: (r.n as f64).ln(),
            log_norm: r.norm.ln(),
        })
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// Output file paths of a job.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub record: PathBuf,
    pub table: PathBuf,
    pub plot: PathBuf,
}

pub fn emit(out_dir: &Path, record: &ResultRecord) -> Result<Outputs> {
    let outputs = Outputs {
        record: out_dir.join("record.json"),
        table: out_dir.join("table.csv"),
        plot: out_dir.join("plot.csv"),
    };
    write_atomic(&outputs.record, &record_bytes(record))?;
    write_atomic(&outputs.table, &table_csv(&record.table))?;
    write_atomic(&outputs.plot, &plot_csv(&record.table))?;
    Ok(outputs)
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn in_dir(out_dir: &Path) -> Self {
        Cache { dir: out_dir.join("cache") }
    }

    fn path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    /// A cached record whose hash matches; unreadable entries count as misses.
    pub fn get(&self, hash: &str) -> Option<ResultRecord> {
        let bytes = fs::read(self.path(hash)).ok()?;
        serde_json::from_slice::<ResultRecord>(&bytes)
            .ok()
            .filter(|r| r.content_hash == hash && r.schema == SCHEMA)
    }

    pub fn put(&self, record: &ResultRecord) -> Result<()> {
        write_atomic(&self.path(&record.content_hash), &record_bytes(record))
    }
}

pub fn load(path: &Path) -> Result<ResultRecord> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    serde_json::from_slice(&bytes).map_err(|source| CliError::Record {
        path: path.to_path_buf(),
        source,
    })
}
