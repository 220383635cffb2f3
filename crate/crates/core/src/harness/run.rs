//! Orchestration for the CLI verbs. Each verb validates the config against
//! its own preconditions, executes the solves and checks, and persists the
//! run directory. Diagnostics failures are outcomes, not errors: the caller
//! turns `DiagnosticsReport::overall` into the exit code.

use crate::catalog;
use crate::diagnostics::{
    self, CheckOutcome, CheckRecord, DiagnosticsReport, InconclusiveNote, RegPathPoint,
};
use crate::error::{Error, Result};
use crate::harness::artifacts::{self, PeanoRow, RunArtifacts, Summary, SweepRow};
use crate::harness::config::{CheckRequest, ExperimentConfig};
use crate::hilbert::Vector;
use crate::integrator::{solve_cauchy, CauchyProblem, SolveReport, SolveStatus, Trajectory};
use crate::operator::{monotonicity_probe, ProbeReport};
use crate::oracle::{minimal_norm_oracle, OracleOutcome, BISECTION_TOL, ORACLE_RESIDUAL_TOL};
use crate::peano::{flow_field, peano_gap, peano_trajectory, PeanoRun};
use crate::schedule::EpsilonSchedule;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug)]
pub struct RunOutcome {
    pub artifacts: RunArtifacts,
    pub diagnostics: DiagnosticsReport,
    pub report: SolveReport,
}

/// The minimal-norm solution used by checks: catalog metadata when present,
/// otherwise the oracle; None when the equation is unsolvable or no oracle
/// applies.
fn minimal_norm_y(config: &ExperimentConfig) -> Result<Option<Vector>> {
    if let Some(ks) = &config.operator.known_solution_set {
        return Ok(ks.minimal_norm_y.clone());
    }
    match minimal_norm_oracle(&config.operator)? {
        OracleOutcome::MinimalNorm(y) => Ok(Some(y)),
        OracleOutcome::NoSolution | OracleOutcome::NoOracle => Ok(None),
    }
}

fn inconclusive(check_name: &str, reason: impl Into<String>) -> CheckOutcome {
    CheckOutcome::Inconclusive(InconclusiveNote {
        check_name: check_name.to_string(),
        reason: reason.into(),
    })
}

/// Decided record with the same relative-margin convention the diagnostics
/// module uses, for the harness's own threshold checks.
fn threshold_record(check_name: &str, bound: f64, observed: f64, location: f64) -> CheckOutcome {
    let worst_margin = (bound - observed) / bound;
    CheckOutcome::Decided(CheckRecord {
        check_name: check_name.to_string(),
        passed: worst_margin >= -bound,
        worst_margin,
        location,
        tolerance_used: bound,
    })
}

fn validate_run_checks(config: &ExperimentConfig) -> Result<()> {
    let constant = config.schedule.is_constant();
    for check in &config.checks {
        let message = match check {
            CheckRequest::ShiftDecay { .. }
            | CheckRequest::DerivativeDecay { .. }
            | CheckRequest::NormBound { .. }
            | CheckRequest::Contraction { .. } => {
                if constant {
                    continue;
                }
                format!("check {:?} requires a constant schedule", check.name())
            }
            CheckRequest::Boundedness { .. } | CheckRequest::ResidualVanishes { .. } => {
                if !constant {
                    continue;
                }
                format!("check {:?} requires a decaying schedule", check.name())
            }
            CheckRequest::RegpathConvergence { .. } => {
                "check \"regpath-convergence\" only runs under sweep-eps".to_string()
            }
        };
        return Err(Error::Config(message));
    }
    Ok(())
}

fn base_tolerances(config: &ExperimentConfig) -> BTreeMap<String, f64> {
    let mut map = BTreeMap::new();
    map.insert("stop.residual_tol".to_string(), config.stop.residual_tol);
    map.insert(
        "stop.divergence_bound".to_string(),
        config.stop.divergence_bound,
    );
    if config.integrator.method.name() == "rk4-adaptive" {
        map.insert(
            "integrator.local_tol".to_string(),
            config.integrator.local_tol,
        );
    }
    map.insert("oracle.residual_tol".to_string(), ORACLE_RESIDUAL_TOL);
    map.insert("oracle.bisection_tol".to_string(), BISECTION_TOL);
    for check in &config.checks {
        map.insert(
            format!("check.{}.tol", check.name()),
            check.tolerance(),
        );
    }
    map
}

#[allow(clippy::too_many_arguments)]
fn build_summary(
    config: &ExperimentConfig,
    command: &'static str,
    config_text: &str,
    tolerances: BTreeMap<String, f64>,
    status: &'static str,
    limit: &Vector,
    final_residual: f64,
    steps_taken: u64,
    residual_rate_constant: Option<f64>,
    overall_pass: bool,
    mut notes: Vec<String>,
) -> Summary {
    if config.schedule_defaulted {
        notes.insert(
            0,
            "schedule defaulted to power-law c0=1, c1=1, b=0.5".to_string(),
        );
    }
    Summary {
        solver: "dsm",
        version: env!("CARGO_PKG_VERSION"),
        command,
        run_id: config.run_id.clone(),
        config_echo: "config.toml".to_string(),
        config_sha256: artifacts::sha256_hex(config_text.as_bytes()),
        operator: config.operator_label.clone(),
        dimension: config.operator.dimension,
        schedule: config.schedule,
        method: config.integrator.method.name(),
        dt: config.integrator.dt,
        t_max: config.stop.t_max,
        tolerances,
        status,
        limit_estimate: limit.as_slice().to_vec(),
        final_residual,
        steps_taken,
        residual_rate_constant,
        overall_pass,
        notes,
    }
}

/// Solves the configured Cauchy problem, applies the requested checks, and
/// writes trajectory.csv, summary.json, diagnostics.json, and the config
/// echo into output_dir/run_id.
pub fn run(config: &ExperimentConfig, config_text: &str) -> Result<RunOutcome> {
    validate_run_checks(config)?;
    let problem = CauchyProblem::new(
        config.operator.clone(),
        config.schedule,
        config.initial.clone(),
    )?;
    let (traj, report) = solve_cauchy(&problem, &config.integrator, &config.stop)?;
    let y = minimal_norm_y(config)?;

    let mut outcomes = Vec::new();
    for check in &config.checks {
        match check {
            CheckRequest::ShiftDecay { h, tol } => {
                let eps = config.schedule.eps(0.0)?;
                match h {
                    Some(h) => {
                        outcomes.push(diagnostics::check_shift_decay(&traj, eps, *h, *tol)?)
                    }
                    None => {
                        for h in diagnostics::DEFAULT_SHIFT_OFFSETS {
                            outcomes.push(diagnostics::check_shift_decay(&traj, eps, h, *tol)?);
                        }
                    }
                }
            }
            CheckRequest::DerivativeDecay { tol } => {
                let eps = config.schedule.eps(0.0)?;
                outcomes.push(diagnostics::check_derivative_decay(&traj, eps, *tol)?);
            }
            CheckRequest::NormBound { tol } => {
                if report.status != SolveStatus::Converged {
                    outcomes.push(inconclusive(
                        "norm-bound",
                        format!(
                            "solve ended {} without converging; V_eps unavailable",
                            report.status.name()
                        ),
                    ));
                } else if let Some(y) = &y {
                    outcomes.push(diagnostics::check_norm_bound(
                        &report.limit_estimate,
                        y,
                        *tol,
                    )?);
                } else {
                    outcomes.push(inconclusive(
                        "norm-bound",
                        "no minimal-norm solution available for this operator",
                    ));
                }
            }
            CheckRequest::Boundedness { tol } => {
                if let Some(y) = &y {
                    outcomes.push(diagnostics::check_boundedness(&traj, y, *tol)?);
                } else {
                    outcomes.push(inconclusive(
                        "boundedness",
                        "no minimal-norm solution available for this operator",
                    ));
                }
            }
            CheckRequest::ResidualVanishes { window, level } => {
                let window = window.unwrap_or(config.stop.t_max / 10.0);
                outcomes.push(diagnostics::check_residual_vanishes(&traj, window, *level)?);
            }
            CheckRequest::Contraction { offset, tol } => {
                let eps = config.schedule.eps(0.0)?;
                let shifted = Vector::new(
                    config.initial.iter().map(|v| v + offset).collect(),
                )?;
                let problem_b =
                    CauchyProblem::new(config.operator.clone(), config.schedule, shifted)?;
                let (traj_b, _) = solve_cauchy(&problem_b, &config.integrator, &config.stop)?;
                outcomes.push(diagnostics::check_contraction(&traj, &traj_b, eps, *tol)?);
            }
            CheckRequest::RegpathConvergence { .. } => {
                unreachable!("rejected by validate_run_checks")
            }
        }
    }
    let diagnostics_report = DiagnosticsReport::from_outcomes(outcomes);

    let rate = if config.schedule.is_constant() {
        None
    } else {
        diagnostics::residual_rate_constant(&traj)
    };
    let summary = build_summary(
        config,
        "run",
        config_text,
        base_tolerances(config),
        report.status.name(),
        &report.limit_estimate,
        report.final_residual,
        report.steps_taken,
        rate,
        diagnostics_report.overall,
        Vec::new(),
    );
    let run_dir = config.output_dir.join(&config.run_id);
    let artifacts =
        artifacts::write_run_artifacts(&run_dir, config_text, &traj, &summary, &diagnostics_report)?;
    Ok(RunOutcome {
        artifacts,
        diagnostics: diagnostics_report,
        report,
    })
}

/// Solves the regularized equation at each eps in the (strictly decreasing)
/// list, assembles the regularization path, checks the norm bound per point
/// and path convergence overall, and writes sweep.csv next to the standard
/// artifacts. trajectory.csv holds the smallest-eps solve.
pub fn sweep_eps(
    config: &ExperimentConfig,
    config_text: &str,
    eps_list: &[f64],
) -> Result<RunOutcome> {
    if !config.schedule.is_constant() {
        return Err(Error::Config(
            "sweep-eps requires a constant-schedule config".into(),
        ));
    }
    if eps_list.is_empty() {
        return Err(Error::Config("--eps list is empty".into()));
    }
    if eps_list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::Config("--eps values must be finite and > 0".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("--eps values must strictly decrease".into()));
    }
    let mut norm_tol = diagnostics::DEFAULT_DECAY_TOL;
    let mut final_tol = diagnostics::DEFAULT_FINAL_TOL;
    for check in &config.checks {
        match check {
            CheckRequest::NormBound { tol } => norm_tol = *tol,
            CheckRequest::RegpathConvergence { final_tol: ft } => final_tol = *ft,
            other => {
                return Err(Error::Config(format!(
                    "sweep-eps only accepts norm-bound and regpath-convergence checks, got {:?}",
                    other.name()
                )))
            }
        }
    }

    let y = minimal_norm_y(config)?;
    let mut rows = Vec::new();
    let mut path = Vec::new();
    let mut total_steps = 0;
    let mut worst_status = SolveStatus::Converged;
    let mut last: Option<(Trajectory, SolveReport)> = None;
    for &eps in eps_list {
        let schedule = EpsilonSchedule::constant(eps)?;
        let problem =
            CauchyProblem::new(config.operator.clone(), schedule, config.initial.clone())?;
        let (traj, report) = solve_cauchy(&problem, &config.integrator, &config.stop)?;
        let v_eps = report.limit_estimate.clone();
        let error_vs_y = match &y {
            Some(y) => v_eps.distance(y)?,
            None => f64::NAN,
        };
        rows.push(SweepRow {
            eps,
            v_eps_norm: v_eps.norm(),
            error_vs_y,
            residual: report.final_residual,
            status: report.status.name(),
        });
        path.push(RegPathPoint {
            eps,
            v_eps,
            residual: report.final_residual,
        });
        total_steps += report.steps_taken;
        if report.status != SolveStatus::Converged {
            worst_status = report.status;
        }
        last = Some((traj, report));
    }
    let (last_traj, last_report) = last.expect("eps_list is nonempty");

    let mut outcomes = Vec::new();
    match &y {
        Some(y) => {
            for p in &path {
                outcomes.push(diagnostics::check_norm_bound(&p.v_eps, y, norm_tol)?);
            }
            outcomes.push(diagnostics::check_regpath_convergence(
                &path,
                y,
                final_tol,
                config.stop.residual_tol,
            )?);
        }
        None => {
            outcomes.push(inconclusive(
                "regpath-convergence",
                "no minimal-norm solution available for this operator",
            ));
        }
    }
    let diagnostics_report = DiagnosticsReport::from_outcomes(outcomes);

    let unconverged = rows.iter().filter(|r| r.status != "converged").count();
    let mut notes = Vec::new();
    if unconverged > 0 {
        notes.push(format!(
            "{unconverged} of {} sweep points did not converge",
            rows.len()
        ));
    }
    let mut tolerances = base_tolerances(config);
    tolerances.insert("check.norm-bound.tol".to_string(), norm_tol);
    tolerances.insert("check.regpath-convergence.tol".to_string(), final_tol);
    let summary = build_summary(
        config,
        "sweep-eps",
        config_text,
        tolerances,
        worst_status.name(),
        &last_report.limit_estimate,
        last_report.final_residual,
        total_steps,
        None,
        diagnostics_report.overall,
        notes,
    );
    let run_dir = config.output_dir.join(&config.run_id);
    let mut artifacts = artifacts::write_run_artifacts(
        &run_dir,
        config_text,
        &last_traj,
        &summary,
        &diagnostics_report,
    )?;
    let sweep_csv = run_dir.join("sweep.csv");
    artifacts::write_text(&sweep_csv, &artifacts::sweep_csv_text(&rows))?;
    artifacts.extra.push(sweep_csv);
    Ok(RunOutcome {
        artifacts,
        diagnostics: diagnostics_report,
        report: last_report,
    })
}

/// Runs the delayed-argument scheme at each index in `n_list` against the
/// ODE solve of the same constant-eps problem, writing a per-n table and
/// deciding the gap and agreement thresholds from [peano].
pub fn peano_compare(
    config: &ExperimentConfig,
    config_text: &str,
    n_list: &[u32],
) -> Result<RunOutcome> {
    if !config.schedule.is_constant() {
        return Err(Error::Config(
            "peano-compare requires a constant-schedule config".into(),
        ));
    }
    if n_list.is_empty() {
        return Err(Error::Config("--n list is empty".into()));
    }
    if n_list.iter().any(|&n| n == 0) {
        return Err(Error::Config("--n values must be >= 1".into()));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("--n values must strictly increase".into()));
    }
    if !config.checks.is_empty() {
        return Err(Error::Config(
            "peano-compare reads its tolerances from [peano]; remove [[checks]]".into(),
        ));
    }

    let problem = CauchyProblem::new(
        config.operator.clone(),
        config.schedule,
        config.initial.clone(),
    )?;
    let (traj, report) = solve_cauchy(&problem, &config.integrator, &config.stop)?;

    let eps = config.schedule.eps(0.0)?;
    let f = flow_field(&config.operator, eps);
    let horizon = config.stop.t_max;
    // One grid for all runs: a divisor of the ODE step that also satisfies
    // the delay constraint for the finest index, so gaps are measured on
    // shared nodes and ODE sample times land on grid nodes.
    let n_max = *n_list.last().expect("nonempty");
    let subdivide = (2.0 * n_max as f64 * config.integrator.dt).ceil().max(1.0);
    let dt = config.integrator.dt / subdivide;

    let mut rows = Vec::new();
    let mut prev: Option<PeanoRun> = None;
    let mut last_gap = f64::NAN;
    let (mut sup_final, mut sup_final_at) = (f64::NAN, 0.0);
    for &n in n_list {
        let run = peano_trajectory(&f, &config.initial, n, horizon, dt)?;
        let gap_vs_prev = match &prev {
            Some(p) => peano_gap(p, &run)?.g_sup,
            None => f64::NAN,
        };
        let (mut sup, mut sup_at) = (0.0, 0.0);
        for s in &traj.samples {
            let d = s.state.distance(run.state_near(s.t))?;
            if d > sup {
                sup = d;
                sup_at = s.t;
            }
        }
        rows.push(PeanoRow {
            n,
            dt,
            gap_vs_prev,
            sup_vs_ode: sup,
        });
        if !gap_vs_prev.is_nan() {
            last_gap = gap_vs_prev;
        }
        sup_final = sup;
        sup_final_at = sup_at;
        prev = Some(run);
    }

    let mut outcomes = Vec::new();
    // Refinement trend: the ODE discrepancy column must not increase with n
    // (absolute slack 1e-9 for discrepancies at float-dust level).
    if rows.len() >= 2 {
        let mut worst = f64::INFINITY;
        let mut at = rows[0].n as f64;
        for w in rows.windows(2) {
            let scale = w[0].sup_vs_ode.max(1e-12);
            let margin = (w[0].sup_vs_ode + 1e-9 - w[1].sup_vs_ode) / scale;
            if margin < worst {
                worst = margin;
                at = w[1].n as f64;
            }
        }
        outcomes.push(CheckOutcome::Decided(CheckRecord {
            check_name: "peano-refinement-trend".to_string(),
            passed: worst >= 0.0,
            worst_margin: worst,
            location: at,
            tolerance_used: 0.0,
        }));
    } else {
        outcomes.push(inconclusive(
            "peano-refinement-trend",
            "a single refinement index gives no trend",
        ));
    }
    outcomes.push(threshold_record(
        "peano-ode-agreement",
        config.peano.agreement_tol,
        sup_final,
        sup_final_at,
    ));
    // Gap resolution is a stopping measure, not a theorem bound: reaching
    // gap_tol decides a pass, falling short flags a partial result.
    let mut notes = vec![format!(
        "finest delay index n={n_max}: sup discrepancy vs ODE = {sup_final:e}"
    )];
    if n_list.len() >= 2 {
        if last_gap <= config.peano.gap_tol {
            outcomes.push(threshold_record(
                "peano-gap",
                config.peano.gap_tol,
                last_gap,
                n_max as f64,
            ));
        } else {
            outcomes.push(inconclusive(
                "peano-gap",
                format!(
                    "partial: consecutive gap {last_gap:e} above gap_tol {:e}",
                    config.peano.gap_tol
                ),
            ));
            notes.push(format!(
                "partial: consecutive gap {last_gap:e} above gap_tol {:e}",
                config.peano.gap_tol
            ));
        }
    } else {
        outcomes.push(inconclusive(
            "peano-gap",
            "a single refinement index gives no consecutive gap",
        ));
    }
    let diagnostics_report = DiagnosticsReport::from_outcomes(outcomes);
    let mut tolerances = base_tolerances(config);
    tolerances.insert("peano.gap_tol".to_string(), config.peano.gap_tol);
    tolerances.insert(
        "peano.agreement_tol".to_string(),
        config.peano.agreement_tol,
    );
    let summary = build_summary(
        config,
        "peano-compare",
        config_text,
        tolerances,
        report.status.name(),
        &report.limit_estimate,
        report.final_residual,
        report.steps_taken,
        None,
        diagnostics_report.overall,
        notes,
    );
    let run_dir = config.output_dir.join(&config.run_id);
    let mut artifacts = artifacts::write_run_artifacts(
        &run_dir,
        config_text,
        &traj,
        &summary,
        &diagnostics_report,
    )?;
    let peano_csv = run_dir.join("peano.csv");
    artifacts::write_text(&peano_csv, &artifacts::peano_csv_text(&rows))?;
    artifacts.extra.push(peano_csv);
    Ok(RunOutcome {
        artifacts,
        diagnostics: diagnostics_report,
        report,
    })
}

#[derive(Debug, Serialize)]
struct ProbeArtifact {
    operator: String,
    dimension: usize,
    sample_count: u32,
    box_radius: f64,
    seed: u64,
    min_inner: f64,
    min_normalized: f64,
    monotone: bool,
    worst_pair: [Vec<f64>; 2],
}

/// Random monotonicity probe of the configured operator; writes probe.json
/// (plus the config echo) and returns the report for the exit decision.
pub fn probe_operator(
    config: &ExperimentConfig,
    config_text: &str,
    samples: Option<u32>,
    seed: Option<u64>,
) -> Result<(PathBuf, ProbeReport)> {
    let samples = samples.unwrap_or(config.probe.samples);
    let seed = seed.unwrap_or(config.probe.seed);
    let report = monotonicity_probe(&config.operator, samples, config.probe.radius, seed)?;
    let run_dir = config.output_dir.join(&config.run_id);
    std::fs::create_dir_all(&run_dir)
        .map_err(|e| Error::io(run_dir.display().to_string(), e))?;
    artifacts::write_text(&run_dir.join("config.toml"), config_text)?;
    let artifact = ProbeArtifact {
        operator: config.operator_label.clone(),
        dimension: config.operator.dimension,
        sample_count: report.sample_count,
        box_radius: report.box_radius,
        seed: report.seed,
        min_inner: report.min_inner,
        min_normalized: report.min_normalized,
        monotone: report.monotone(),
        worst_pair: [
            report.worst_pair.0.as_slice().to_vec(),
            report.worst_pair.1.as_slice().to_vec(),
        ],
    };
    let path = run_dir.join("probe.json");
    artifacts::write_json(&path, &artifact)?;
    Ok((path, report))
}

/// Human-readable catalog listing for `dsm list-operators`.
pub fn list_operators_text() -> Result<String> {
    let mut out = String::new();
    for entry in catalog::catalog()? {
        let marker = if entry.test_only { "  [test-only]" } else { "" };
        writeln!(
            out,
            "{} (dim {}){marker}",
            entry.name, entry.instance.dimension
        )
        .expect("string write");
        writeln!(out, "  formula: {}", entry.summary).expect("string write");
        writeln!(out, "  monotone: {}", entry.monotonicity).expect("string write");
        match &entry.instance.known_solution_set {
            Some(ks) => match &ks.minimal_norm_y {
                Some(y) => {
                    let components: Vec<String> =
                        y.iter().map(|v| format!("{v}")).collect();
                    writeln!(
                        out,
                        "  solution: y = [{}]  ({})",
                        components.join(", "),
                        ks.oracle_tag
                    )
                    .expect("string write");
                }
                None => writeln!(out, "  solution: none  ({})", ks.oracle_tag)
                    .expect("string write"),
            },
            None => writeln!(out, "  solution: unknown").expect("string write"),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{parse_config, CliOverrides};
    use std::fs;

    fn overrides_to(dir: &std::path::Path) -> CliOverrides {
        CliOverrides {
            out: Some(dir.to_path_buf()),
            ..CliOverrides::default()
        }
    }

    const CONSTANT_RUN: &str = r#"
run_id = "affine-const"

[operator]
catalog = "affine-1d"

[schedule]
kind = "constant"
eps = 0.1

[stop]
residual_tol = 1e-10
t_max = 200.0

[[checks]]
name = "shift-decay"

[[checks]]
name = "derivative-decay"

[[checks]]
name = "norm-bound"

[[checks]]
name = "contraction"
"#;

    #[test]
    fn run_produces_passing_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config(CONSTANT_RUN, &overrides_to(dir.path())).unwrap();
        let outcome = run(&config, CONSTANT_RUN).unwrap();
        assert!(outcome.diagnostics.overall, "{:?}", outcome.diagnostics);
        // shift-decay expands to three offsets, plus the other three checks.
        assert_eq!(outcome.diagnostics.records.len(), 6);
        assert_eq!(outcome.report.status, SolveStatus::Converged);
        assert!((outcome.report.limit_estimate[0] - 1.0 / 1.1).abs() < 1e-8);
        for path in [
            &outcome.artifacts.config_echo,
            &outcome.artifacts.trajectory_csv,
            &outcome.artifacts.summary_json,
            &outcome.artifacts.diagnostics_json,
        ] {
            assert!(path.exists(), "{path:?} missing");
        }
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&outcome.artifacts.summary_json).unwrap())
                .unwrap();
        assert_eq!(summary["status"], "converged");
        assert_eq!(summary["overall_pass"], true);
        assert_eq!(
            summary["config_sha256"].as_str().unwrap(),
            artifacts::sha256_hex(CONSTANT_RUN.as_bytes())
        );
        assert!(summary["tolerances"]["stop.residual_tol"].as_f64().unwrap() == 1e-10);
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config(CONSTANT_RUN, &overrides_to(dir.path())).unwrap();
        let first = run(&config, CONSTANT_RUN).unwrap();
        let bytes_a = fs::read(&first.artifacts.trajectory_csv).unwrap();
        let summary_a = fs::read(&first.artifacts.summary_json).unwrap();
        let second = run(&config, CONSTANT_RUN).unwrap();
        let bytes_b = fs::read(&second.artifacts.trajectory_csv).unwrap();
        let summary_b = fs::read(&second.artifacts.summary_json).unwrap();
        assert_eq!(bytes_a, bytes_b);
        assert_eq!(summary_a, summary_b);
    }

    #[test]
    fn csv_rows_satisfy_the_residual_invariant() {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config(CONSTANT_RUN, &overrides_to(dir.path())).unwrap();
        let outcome = run(&config, CONSTANT_RUN).unwrap();
        let text = fs::read_to_string(&outcome.artifacts.trajectory_csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,state_0,residual,eps");
        let mut rows = 0;
        for line in lines {
            let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            let (_t, state, residual, eps) = (cols[0], cols[1], cols[2], cols[3]);
            let u = Vector::new(vec![state]).unwrap();
            let bu = config.operator.apply(&u).unwrap();
            let recomputed = (bu[0] + eps * state).abs();
            assert!(
                (recomputed - residual).abs() <= 1e-12,
                "row {line}: recomputed {recomputed}"
            );
            rows += 1;
        }
        assert!(rows > 100);
    }

    #[test]
    fn mismatched_check_and_schedule_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let text = CONSTANT_RUN.replace(
            "kind = \"constant\"\neps = 0.1",
            "kind = \"power-law\"\nc0 = 1.0\nc1 = 1.0\nb = 0.5",
        );
        let config = parse_config(&text, &overrides_to(dir.path())).unwrap();
        let err = run(&config, &text).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    const UNSOLVABLE_RUN: &str = r#"
run_id = "exp-unsolvable"

[operator]
catalog = "exp-unsolvable-1d"

[schedule]
kind = "power-law"
c0 = 1.0
c1 = 1.0
b = 0.5

[stop]
residual_tol = 1e-8
t_max = 1000.0

[[checks]]
name = "residual-vanishes"

[[checks]]
name = "boundedness"
"#;

    #[test]
    fn unsolvable_run_fails_and_never_claims_convergence() {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config(UNSOLVABLE_RUN, &overrides_to(dir.path())).unwrap();
        let outcome = run(&config, UNSOLVABLE_RUN).unwrap();
        assert_ne!(outcome.report.status, SolveStatus::Converged);
        assert!(!outcome.diagnostics.overall);
        let failed: Vec<_> = outcome
            .diagnostics
            .records
            .iter()
            .filter(|r| !r.passed)
            .collect();
        assert!(failed.iter().any(|r| r.check_name == "residual-vanishes"));
        // boundedness has no y to compare against: inconclusive, not a pass.
        assert!(outcome
            .diagnostics
            .inconclusive
            .iter()
            .any(|n| n.check_name == "boundedness"));
    }

    const SWEEP: &str = r#"
run_id = "affine-sweep"

[operator]
catalog = "affine-1d"

[schedule]
kind = "constant"
eps = 0.1

[stop]
residual_tol = 1e-10
t_max = 400.0

[[checks]]
name = "norm-bound"

[[checks]]
name = "regpath-convergence"
"#;

    #[test]
    fn sweep_matches_the_closed_form_error_column() {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config(SWEEP, &overrides_to(dir.path())).unwrap();
        let outcome = sweep_eps(&config, SWEEP, &[0.1, 0.01, 0.001]).unwrap();
        assert!(outcome.diagnostics.overall, "{:?}", outcome.diagnostics);
        let sweep_csv = outcome
            .artifacts
            .extra
            .iter()
            .find(|p| p.ends_with("sweep.csv"))
            .unwrap();
        let text = fs::read_to_string(sweep_csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "eps,v_eps_norm,error_vs_y,residual,status"
        );
        for (line, eps) in lines.zip([0.1f64, 0.01, 0.001]) {
            let cols: Vec<&str> = line.split(',').collect();
            let error: f64 = cols[2].parse().unwrap();
            let expected = eps / (1.0 + eps);
            assert!(
                (error - expected).abs() <= 1e-6 * expected,
                "eps={eps}: error {error} vs closed form {expected}"
            );
            assert_eq!(cols[4], "converged");
        }
    }

    #[test]
    fn sweep_requires_decreasing_eps() {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config(SWEEP, &overrides_to(dir.path())).unwrap();
        assert!(sweep_eps(&config, SWEEP, &[0.01, 0.1]).is_err());
        assert!(sweep_eps(&config, SWEEP, &[]).is_err());
    }

    const PEANO: &str = r#"
run_id = "relu-peano"

[operator]
catalog = "relu-1d"

[schedule]
kind = "constant"
eps = 0.1

[integrator]
method = "rk4"
dt = 0.01

[stop]
residual_tol = 1e-300
t_max = 2.0
"#;

    #[test]
    fn peano_compare_table_improves_with_n() {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config(PEANO, &overrides_to(dir.path())).unwrap();
        let outcome = peano_compare(&config, PEANO, &[10, 40, 160]).unwrap();
        let peano_csv = outcome
            .artifacts
            .extra
            .iter()
            .find(|p| p.ends_with("peano.csv"))
            .unwrap();
        let text = fs::read_to_string(peano_csv).unwrap();
        let rows: Vec<Vec<&str>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').collect())
            .collect();
        assert_eq!(rows.len(), 3);
        let sups: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
        assert!(sups[0] > sups[1] && sups[1] > sups[2], "{sups:?}");
        assert!(sups[2] <= 1e-2, "final discrepancy {}", sups[2]);
        let agreement = outcome
            .diagnostics
            .records
            .iter()
            .find(|r| r.check_name == "peano-ode-agreement")
            .unwrap();
        assert!(agreement.passed);
    }

    #[test]
    fn probe_flags_the_fixture_and_passes_catalog_entries() {
        let dir = tempfile::tempdir().unwrap();
        let text = CONSTANT_RUN.replace("affine-1d", "non-monotone-fixture");
        let config = parse_config(&text, &overrides_to(dir.path())).unwrap();
        let (path, report) = probe_operator(&config, &text, Some(100), Some(3)).unwrap();
        assert!(!report.monotone());
        let artifact: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(artifact["monotone"], false);
        assert_eq!(artifact["sample_count"], 100);
    }

    #[test]
    fn catalog_listing_names_every_entry() {
        let text = list_operators_text().unwrap();
        for entry in catalog::catalog().unwrap() {
            assert!(text.contains(entry.name), "missing {}", entry.name);
        }
        assert!(text.contains("test-only"));
        assert!(text.contains("solution: none"));
    }
}
