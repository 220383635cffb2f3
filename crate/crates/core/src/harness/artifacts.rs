//! Artifact persistence. Every float is written with Rust's shortest
//! round-trip formatting, so equal runs produce byte-identical files.

use crate::diagnostics::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::schedule::EpsilonSchedule;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Paths produced by one run. `extra` holds command-specific tables
/// (the eps sweep table, the delay-refinement table).
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub run_dir: PathBuf,
    pub config_echo: PathBuf,
    pub trajectory_csv: PathBuf,
    pub summary_json: PathBuf,
    pub diagnostics_json: PathBuf,
    pub extra: Vec<PathBuf>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").expect("writing to a String cannot fail");
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

/// Column order is fixed: t, state_0..state_{n-1}, residual, eps.
pub fn trajectory_csv_text(traj: &Trajectory) -> String {
    let dim = traj.samples[0].state.dim();
    let mut out = String::new();
    out.push('t');
    for i in 0..dim {
        write!(out, ",state_{i}").expect("string write");
    }
    out.push_str(",residual,eps\n");
    for s in &traj.samples {
        write!(out, "{}", s.t).expect("string write");
        for v in s.state.iter() {
            write!(out, ",{v}").expect("string write");
        }
        writeln!(out, ",{},{}", s.residual, s.eps).expect("string write");
    }
    out
}

/// One row of the eps sweep table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub eps: f64,
    pub v_eps_norm: f64,
    /// ||V_eps - y||; NaN when no minimal-norm oracle is available.
    pub error_vs_y: f64,
    pub residual: f64,
    /// Solve status name; rows from unconverged points are flagged here.
    pub status: &'static str,
}

pub fn sweep_csv_text(rows: &[SweepRow]) -> String {
    let mut out = String::from("eps,v_eps_norm,error_vs_y,residual,status\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.eps, r.v_eps_norm, r.error_vs_y, r.residual, r.status
        )
        .expect("string write");
    }
    out
}

/// One row of the delay-refinement comparison table.
#[derive(Debug, Clone)]
pub struct PeanoRow {
    pub n: u32,
    pub dt: f64,
    /// Sup gap against the previous (coarser) run; NaN for the first row.
    pub gap_vs_prev: f64,
    /// Sup discrepancy against the ODE solve at shared sample times.
    pub sup_vs_ode: f64,
}

pub fn peano_csv_text(rows: &[PeanoRow]) -> String {
    let mut out = String::from("n,dt,gap_vs_prev,sup_vs_ode\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.n, r.dt, r.gap_vs_prev, r.sup_vs_ode)
            .expect("string write");
    }
    out
}

/// Run metadata: solver identity, the exact config (echo + hash), every
/// tolerance in effect, and the outcome. Field order is fixed.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub solver: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub run_id: String,
    pub config_echo: String,
    pub config_sha256: String,
    pub operator: String,
    pub dimension: usize,
    pub schedule: EpsilonSchedule,
    pub method: &'static str,
    pub dt: f64,
    pub t_max: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub status: &'static str,
    pub limit_estimate: Vec<f64>,
    pub final_residual: f64,
    pub steps_taken: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_rate_constant: Option<f64>,
    pub overall_pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn write_run_artifacts(
    run_dir: &Path,
    config_text: &str,
    traj: &Trajectory,
    summary: &Summary,
    diagnostics: &DiagnosticsReport,
) -> Result<RunArtifacts> {
    fs::create_dir_all(run_dir).map_err(|e| Error::io(run_dir.display().to_string(), e))?;
    let config_echo = run_dir.join("config.toml");
    write_text(&config_echo, config_text)?;
    let trajectory_csv = run_dir.join("trajectory.csv");
    write_text(&trajectory_csv, &trajectory_csv_text(traj))?;
    let summary_json = run_dir.join("summary.json");
    write_json(&summary_json, summary)?;
    let diagnostics_json = run_dir.join("diagnostics.json");
    write_json(&diagnostics_json, diagnostics)?;
    Ok(RunArtifacts {
        run_dir: run_dir.to_path_buf(),
        config_echo,
        trajectory_csv,
        summary_json,
        diagnostics_json,
        extra: Vec::new(),
    })
}
