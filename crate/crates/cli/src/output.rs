use std::fs;
use std::io::Write;
use std::path::Path;

use projnorm::{FitResult64, TraceRow};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct ResultJson {
    pub norm_estimate: f64,
    pub nuclear_rank: usize,
    pub recon_error: f64,
    pub converged: bool,
    pub restart_index: usize,
    pub coeffs_abs: Vec<f64>,
}

impl From<&FitResult64> for ResultJson {
    fn from(r: &FitResult64) -> Self {
        Self {
            norm_estimate: r.norm_estimate,
            nuclear_rank: r.nuclear_rank,
            recon_error: r.recon_error,
            converged: r.converged,
            restart_index: r.restart_index,
            coeffs_abs: r.coeffs.iter().map(|c| c.norm()).collect(),
        }
    }
}

/// Thirteen significant digits, fixed layout.
pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn trace_csv(trace: &[TraceRow<f64>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "epoch",
        "total_loss",
        "recon_error",
        "rank_count",
        "norm_sum",
    ])?;
    for row in trace {
        w.write_record([
            row.epoch.to_string(),
            num(row.total_loss),
            num(row.recon_error),
            row.rank_count.to_string(),
            num(row.norm_sum),
        ])?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param1: f64,
    pub param2: Option<f64>,
    pub norm: f64,
    pub rank: usize,
    pub recon_error: f64,
    pub converged: bool,
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "param1",
        "param2",
        "norm",
        "rank",
        "recon_error",
        "converged",
    ])?;
    for r in rows {
        w.write_record([
            r.param1.to_string(),
            r.param2.map(|p| p.to_string()).unwrap_or_default(),
            num(r.norm),
            r.rank.to_string(),
            num(r.recon_error),
            r.converged.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

/// Result JSON (and optionally the trace) for the selected restart.
pub fn write_result(dir: &Path, result: &FitResult64, trace: bool) -> Result<(), CliError> {
    let mut json = serde_json::to_vec_pretty(&ResultJson::from(result))?;
    json.push(b'\n');
    write_file(dir, "result.json", &json)?;
    if trace {
        write_file(dir, "trace.csv", &trace_csv(&result.trace)?)?;
    }
    Ok(())
}

pub fn stdout(bytes: &[u8]) -> Result<(), CliError> {
    std::io::stdout().lock().write_all(bytes)?;
    Ok(())
}
