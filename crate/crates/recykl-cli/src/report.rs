use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use recykl::threestage::SolveReport;

#[derive(Debug, Serialize)]
pub struct RunRow<'a> {
    pub method: &'a str,
    pub j: usize,
    pub matvecs: u64,
    pub precond_apps: u64,
    pub stage1_dim: usize,
    pub stage2_iters: usize,
    pub stage3_iters: usize,
    pub wall_ms: f64,
    pub final_residual: f64,
    pub tol: f64,
    pub converged: bool,
    pub reduced_cond: Option<f64>,
    pub reduced_ortho_error: Option<f64>,
}

impl<'a> RunRow<'a> {
    pub fn new(method: &'a str, tol: f64, r: &SolveReport) -> Self {
        Self {
            method,
            j: r.j,
            matvecs: r.matvecs,
            precond_apps: r.precond_apps,
            stage1_dim: r.stage1_dim,
            stage2_iters: r.stage2_iters,
            stage3_iters: r.stage3_iters,
            wall_ms: r.wall_ms,
            final_residual: r.final_residual,
            tol,
            converged: r.converged,
            reduced_cond: r.reduced_cond,
            reduced_ortho_error: r.reduced_ortho_error,
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    s.split('_').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("_")
}

#[derive(Serialize)]
struct HistoryRow {
    j: usize,
    k: usize,
    residual: f64,
}

/// `history/<method>_tol<tol>.csv` with one row per stage-3 iterate.
pub fn write_history(dir: &Path, method: &str, tol: f64, reports: &[SolveReport]) -> Result<()> {
    let hdir = dir.join("history");
    fs::create_dir_all(&hdir).with_context(|| format!("creating {}", hdir.display()))?;
    let rows: Vec<HistoryRow> = reports
        .iter()
        .flat_map(|r| r.residual_history.iter().enumerate().map(move |(k, &residual)| HistoryRow { j: r.j, k, residual }))
        .collect();
    write_csv(&hdir.join(format!("{}_tol{tol:e}.csv", slug(method))), &rows)
}
