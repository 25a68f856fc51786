//! Per-sample records, CSV output and the JSON summary.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A typed cell. Floats are written in shortest round-trip exponent form.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Flag(bool),
    Missing,
}

impl Value {
    pub fn render(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) => format!("{v:e}"),
            Value::Text(s) => s.clone(),
            Value::Flag(b) => b.to_string(),
            Value::Missing => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Float(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}
impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}
impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Flag(v)
    }
}
impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}
impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

#[derive(Clone, Debug)]
pub struct Record {
    pub sample: usize,
    /// SHA-256 of the sample's input data, truncated to 16 hex digits.
    pub input_digest: String,
    /// One value per experiment column.
    pub values: Vec<Value>,
    pub pass: bool,
    pub error: Option<String>,
}

/// All records of one run plus run-level extras.
#[derive(Clone, Debug)]
pub struct Table {
    pub experiment: String,
    pub check: String,
    pub config_digest: String,
    pub columns: Vec<&'static str>,
    pub records: Vec<Record>,
    pub extras: BTreeMap<String, f64>,
    /// Whether run-level conditions (beyond the per-sample ones) hold.
    pub run_pass: bool,
}

impl Table {
    pub fn passed(&self) -> usize {
        self.records.iter().filter(|r| r.pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.run_pass && self.passed() == self.records.len()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> =
            ["experiment", "check", "sample", "config_digest", "input_digest"].iter().map(|s| s.to_string()).collect();
        h.extend(self.columns.iter().map(|s| s.to_string()));
        h.push("pass".into());
        h.push("error".into());
        h
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        let mut records = self.records.clone();
        records.sort_by_key(|r| r.sample);
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.header())?;
        for r in &records {
            let mut row = vec![
                self.experiment.clone(),
                self.check.clone(),
                r.sample.to_string(),
                self.config_digest.clone(),
                r.input_digest.clone(),
            ];
            row.extend(r.values.iter().map(Value::render));
            row.push(r.pass.to_string());
            row.push(r.error.clone().unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()
    }

    /// Largest finite magnitude of each float column.
    pub fn column_maxima(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for (c, name) in self.columns.iter().enumerate() {
            let vals: Vec<f64> =
                self.records.iter().filter_map(|r| r.values.get(c).and_then(Value::as_f64)).filter(|v| v.is_finite()).collect();
            if let Some(m) = vals.iter().map(|v| v.abs()).reduce(f64::max) {
                out.insert(name.to_string(), m);
            }
        }
        out
    }

    pub fn summary(&self, csv_name: &str, seed: u64, seconds: f64) -> Summary {
        Summary {
            experiment: self.experiment.clone(),
            check: self.check.clone(),
            config_digest: self.config_digest.clone(),
            seed,
            samples: self.records.len(),
            passed: self.passed(),
            failed: self.records.len() - self.passed(),
            status: if self.all_pass() { "pass".into() } else { "fail".into() },
            csv: csv_name.to_string(),
            maxima: self.column_maxima(),
            extras: self.extras.clone(),
            seconds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub check: String,
    pub config_digest: String,
    pub seed: u64,
    pub samples: usize,
    pub passed: usize,
    pub failed: usize,
    pub status: String,
    /// File name of the CSV, relative to the summary.
    pub csv: String,
    pub maxima: BTreeMap<String, f64>,
    pub extras: BTreeMap<String, f64>,
    /// Wall time of the run.
    pub seconds: f64,
}

impl Summary {
    pub fn write(&self, path: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        std::fs::write(path, text + "\n")
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}
