//! Plain-text report of a finished run.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::records::Summary;

/// Render the summary at `path` together with the failing rows of its CSV.
pub fn render(path: &Path) -> io::Result<String> {
    let summary = Summary::read(path)?;
    let csv_path = path.parent().unwrap_or(Path::new(".")).join(&summary.csv);
    let mut reader = csv::Reader::from_path(&csv_path)?;
    let header = reader.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (sample_col, pass_col, error_col) = (col("sample"), col("pass"), col("error"));
    let mut failing = Vec::new();
    let mut rows = 0;
    for row in reader.records() {
        let row = row.map_err(io::Error::other)?;
        rows += 1;
        if pass_col.and_then(|c| row.get(c)) != Some("true") {
            let id = sample_col.and_then(|c| row.get(c)).unwrap_or("?").to_string();
            let err = error_col.and_then(|c| row.get(c)).unwrap_or("").to_string();
            failing.push((id.parse::<usize>().unwrap_or(usize::MAX), id, err));
        }
    }
    failing.sort();

    let mut out = String::new();
    let _ = writeln!(out, "{:<20} {:<20} {:>8} {:>8} {:>8}  status", "experiment", "check", "samples", "passed", "failed");
    let _ = writeln!(
        out,
        "{:<20} {:<20} {:>8} {:>8} {:>8}  {}",
        summary.experiment, summary.check, summary.samples, summary.passed, summary.failed, summary.status
    );
    if rows == 0 {
        let _ = writeln!(out, "0 samples");
        return Ok(out);
    }
    if rows != summary.samples {
        let _ = writeln!(out, "warning: {} holds {rows} rows, summary says {}", summary.csv, summary.samples);
    }
    if !summary.maxima.is_empty() {
        let _ = writeln!(out, "column maxima:");
        for (k, v) in &summary.maxima {
            let _ = writeln!(out, "  {k:<24} {v:.3e}");
        }
    }
    if !summary.extras.is_empty() {
        let _ = writeln!(out, "extras:");
        for (k, v) in &summary.extras {
            let _ = writeln!(out, "  {k:<24} {v:.10}");
        }
    }
    for (_, id, err) in &failing {
        if err.is_empty() {
            let _ = writeln!(out, "failed sample {id}");
        } else {
            let _ = writeln!(out, "failed sample {id}: {err}");
        }
    }
    let _ = writeln!(out, "wall time {:.2} s", summary.seconds);
    Ok(out)
}
