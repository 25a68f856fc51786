//! Experiment runner: JSON configs in, per-sample CSV and a JSON summary out.

pub mod config;
pub mod experiments;
pub mod records;
pub mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Check, ConfigError, Experiment, ExperimentConfig};
pub use records::{Summary, Table};

/// Command-line overrides of a config.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    /// Value of `HKQ_OUT_DIR`, if set.
    pub env_out_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub enum RunError {
    /// The config could not be read or is invalid; nothing was written.
    Config(ConfigError),
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Io(e) => write!(f, "cannot write results: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Io(_) => 1,
        }
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub table: Table,
    pub summary: Summary,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Output directory precedence: flag, then config, then environment, then `results`.
pub fn resolve_out_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .or_else(|| opts.env_out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Load, validate and run a config file. Results are written to
/// `<out>/<stem>.csv` and `<out>/<stem>.summary.json`.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let mut cfg = ExperimentConfig::load(path).map_err(RunError::Config)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = opts.jobs {
        if jobs == 0 {
            return Err(RunError::Config(ConfigError::Invalid("jobs must be positive".into())));
        }
        cfg.jobs = Some(jobs);
    }
    run_config(&cfg, &stem, opts)
}

pub fn run_config(cfg: &ExperimentConfig, stem: &str, opts: &RunOptions) -> Result<RunOutput, RunError> {
    cfg.validate().map_err(RunError::Config)?;
    experiments::preflight(cfg).map_err(|m| RunError::Config(ConfigError::Invalid(m)))?;
    let jobs = opts.jobs.or(cfg.jobs).unwrap_or_else(default_jobs);
    let out = resolve_out_dir(cfg, opts);
    let start = Instant::now();
    let table = experiments::run_table(cfg, jobs);
    let seconds = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(&out).map_err(RunError::Io)?;
    let csv_name = format!("{stem}.csv");
    let csv_path = out.join(&csv_name);
    let summary_path = out.join(format!("{stem}.summary.json"));
    table.write_csv(&csv_path).map_err(RunError::Io)?;
    let summary = table.summary(&csv_name, cfg.seed, seconds);
    summary.write(&summary_path).map_err(RunError::Io)?;
    Ok(RunOutput { table, summary, csv_path, summary_path })
}
