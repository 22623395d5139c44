//! Result files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::engine::{aggregate, write_stream, Axis, RunOutput, SweepPoint, SweepRow};
use crate::error::{Error, Result};

/// Version tag written at the top of every aggregated sweep CSV.
pub const SWEEP_SCHEMA: &str = "famus sweep v1";

pub const SWEEP_COLUMNS: [&str; 10] = [
    "axis",
    "x",
    "policy",
    "runs",
    "cost_mean",
    "cost_se",
    "accuracy_loss_mean",
    "accuracy_loss_se",
    "jfi_mean",
    "jfi_se",
];

/// Creates `dir` and checks that none of `files` exist there, unless
/// `force` is set. Nothing is written when any check fails.
fn prepare(dir: &Path, files: &[String], force: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths: Vec<PathBuf> = files.iter().map(|f| dir.join(f)).collect();
    if !force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(Error::WouldOverwrite { path: p.clone() });
        }
    }
    Ok(paths)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `run_<policy>_seed<seed>.csv` (the slot stream) and the matching
/// `.json` summary. Returns the paths written.
pub fn emit_run(out: &RunOutput, dir: &Path, force: bool) -> Result<Vec<PathBuf>> {
    let stem = format!("run_{}_seed{}", out.summary.policy, out.summary.seed);
    let paths = prepare(dir, &[format!("{stem}.csv"), format!("{stem}.json")], force)?;
    let mut csv = Vec::new();
    write_stream(&mut csv, &out.slots)?;
    write(&paths[0], &csv)?;
    write(&paths[1], out.summary.to_json().as_bytes())?;
    Ok(paths)
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

/// The aggregated table as CSV, one row per `(x, policy)`.
pub fn sweep_csv(axis: Axis, rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut buf = format!("# {SWEEP_SCHEMA}; seed-averaged means with standard errors\n").into_bytes();
    let mut w = csv::Writer::from_writer(&mut buf);
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record([
            axis.name().to_string(),
            r.x.to_string(),
            r.policy.name().to_string(),
            r.runs.to_string(),
            num(r.cost_mean),
            num(r.cost_se),
            num(r.accuracy_loss_mean),
            num(r.accuracy_loss_se),
            num(r.jfi_mean),
            num(r.jfi_se),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    drop(w);
    Ok(buf)
}

/// Writes `sweep_<axis>.csv` (aggregated) and `sweep_<axis>_runs.json`
/// (every run's summary).
pub fn emit_sweep(axis: Axis, points: &[SweepPoint], dir: &Path, force: bool) -> Result<Vec<PathBuf>> {
    if points.is_empty() {
        return Err(Error::config("sweep produced no runs"));
    }
    let stem = format!("sweep_{}", axis.name());
    let paths = prepare(dir, &[format!("{stem}.csv"), format!("{stem}_runs.json")], force)?;
    write(&paths[0], &sweep_csv(axis, &aggregate(points))?)?;
    let runs = serde_json::to_vec_pretty(points).map_err(|e| Error::Json {
        path: paths[1].clone(),
        source: e,
    })?;
    write(&paths[1], &runs)?;
    Ok(paths)
}
