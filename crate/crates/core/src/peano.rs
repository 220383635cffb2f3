//! Constructive existence scheme: the delayed integral equation
//! w(t) = w0 - integral of F(w(s - 1/n)) over [0, t], with w(s) = w0 for
//! s <= 0. As n grows the delayed trajectories form a Cauchy family whose
//! limit solves the undelayed equation, which is how existence of the flow
//! is established constructively.
//!
//! Quadrature is left-endpoint Riemann on a uniform grid, mirroring the
//! constructive argument: on the first delay interval the integrand is the
//! constant F(w0), so that segment is reproduced exactly. Delayed lookups
//! read the nearest earlier grid point; dt <= 1/(2n) keeps the lookup error
//! subordinate to the 1/n delay error.

use crate::error::{Error, Result};
use crate::hilbert::Vector;
use crate::operator::OperatorInstance;

/// F(w) = B(w) + eps * w, the map integrated by the delayed scheme. The
/// associated flow is dw/dt = -F(w).
pub fn flow_field(op: &OperatorInstance, eps: f64) -> impl Fn(&Vector) -> Result<Vector> + '_ {
    move |w: &Vector| {
        let b = op.apply(w)?;
        Vector::new(
            w.iter()
                .zip(b.iter())
                .map(|(wi, bi)| bi + eps * wi)
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct PeanoSample {
    pub t: f64,
    pub state: Vector,
}

/// One delayed-scheme run at a fixed delay index n.
#[derive(Debug, Clone)]
pub struct PeanoRun {
    /// Delay is 1/n.
    pub n: u32,
    pub dt: f64,
    /// Last grid time (at least the requested horizon).
    pub horizon: f64,
    pub w0: Vector,
    pub samples: Vec<PeanoSample>,
}

impl PeanoRun {
    pub fn final_state(&self) -> &Vector {
        &self.samples.last().expect("run is never empty").state
    }

    /// State at grid time nearest to t (grid is uniform).
    pub fn state_near(&self, t: f64) -> &Vector {
        let idx = (t / self.dt).round().clamp(0.0, (self.samples.len() - 1) as f64) as usize;
        &self.samples[idx].state
    }
}

/// Pairwise distance between two runs on their shared grid.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub n_a: u32,
    pub n_b: u32,
    pub g_sup: f64,
    /// (t, ||w_a(t) - w_b(t)||) on the shared grid.
    pub per_time: Vec<(f64, f64)>,
}

fn grid_steps(horizon: f64, dt: f64) -> usize {
    let ratio = horizon / dt;
    let rounded = ratio.round();
    if rounded >= 1.0 && (ratio - rounded).abs() <= 1e-6 * ratio.max(1.0) {
        rounded as usize
    } else {
        ratio.ceil().max(1.0) as usize
    }
}

/// Advances w(t+dt) = w(t) - dt * F(w(t+dt-1/n)) on a uniform grid, with
/// w == w0 for arguments at or below zero.
pub fn peano_trajectory<F>(f: &F, w0: &Vector, n: u32, horizon: f64, dt: f64) -> Result<PeanoRun>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    if n == 0 {
        return Err(Error::InvalidParameter("delay index n must be >= 1".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be > 0, got {horizon}"
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let delay = 1.0 / n as f64;
    if dt > 0.5 * delay * (1.0 + 1e-12) {
        return Err(Error::GridDelayIncompatible { dt, n });
    }
    let steps = grid_steps(horizon, dt);
    let mut states: Vec<Vector> = Vec::with_capacity(steps + 1);
    states.push(w0.clone());
    for j in 0..steps {
        let t_next = (j + 1) as f64 * dt;
        let arg = t_next - delay;
        let delayed = if arg <= 0.0 {
            w0
        } else {
            // Nearest earlier grid point; the nudge absorbs roundoff when
            // the argument lands exactly on the grid. Causality holds since
            // dt <= 1/(2n) puts the index at least one step behind.
            let idx = ((arg / dt) + 1e-9).floor() as usize;
            &states[idx.min(j)]
        };
        let increment = f(delayed)?;
        let current = &states[j];
        let next = Vector::new(
            current
                .iter()
                .zip(increment.iter())
                .map(|(w, df)| w - dt * df)
                .collect(),
        )?;
        states.push(next);
    }
    let samples: Vec<PeanoSample> = states
        .into_iter()
        .enumerate()
        .map(|(j, state)| PeanoSample {
            t: j as f64 * dt,
            state,
        })
        .collect();
    Ok(PeanoRun {
        n,
        dt,
        horizon: samples.last().expect("nonempty").t,
        w0: w0.clone(),
        samples,
    })
}

/// Sup distance between two runs over the shared grid (the coarser one).
/// The runs must start from the same point, cover the same horizon, and
/// have step sizes in an integer ratio.
pub fn peano_gap(a: &PeanoRun, b: &PeanoRun) -> Result<GapReport> {
    if a.w0.as_slice() != b.w0.as_slice() {
        return Err(Error::MismatchedRuns(
            "runs start from different points".into(),
        ));
    }
    if (a.horizon - b.horizon).abs() > 1e-9 * a.horizon.max(1.0) {
        return Err(Error::MismatchedRuns(format!(
            "runs cover different horizons ({} vs {})",
            a.horizon, b.horizon
        )));
    }
    let (coarse, fine) = if a.dt >= b.dt { (a, b) } else { (b, a) };
    let ratio = coarse.dt / fine.dt;
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > 1e-9 * ratio {
        return Err(Error::MismatchedRuns(format!(
            "grids lack a common refinement (dt {} vs {})",
            coarse.dt, fine.dt
        )));
    }
    let k = k as usize;
    let mut g_sup = 0.0_f64;
    let mut per_time = Vec::with_capacity(coarse.samples.len());
    for (i, cs) in coarse.samples.iter().enumerate() {
        let Some(fs) = fine.samples.get(i * k) else {
            break;
        };
        let gap = cs.state.distance(&fs.state)?;
        g_sup = g_sup.max(gap);
        per_time.push((cs.t, gap));
    }
    Ok(GapReport {
        n_a: a.n,
        n_b: b.n,
        g_sup,
        per_time,
    })
}

/// Documented constant for the integral-equation residual bound reported by
/// [`peano_limit`]: a converged limit satisfies the undelayed equation with
/// residual at most this factor times the achieved gap tolerance.
pub const INTEGRAL_RESIDUAL_FACTOR: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct PeanoLimitReport {
    /// The finest run produced (the limit estimate).
    pub run: PeanoRun,
    /// Consecutive-run sup gap at the last comparison; None for a
    /// single-entry schedule, where no gap can be measured.
    pub achieved_gap: Option<f64>,
    /// Whether the gap dropped to the requested tolerance before the
    /// schedule was exhausted.
    pub converged: bool,
    /// Sup over the grid of || w(t_j) - (w0 - dt * sum of F(w(t_i)), i<j) ||,
    /// the left-endpoint residual of the undelayed integral equation.
    pub integral_residual: f64,
}

/// Refines the delay index along `n_schedule` until two consecutive runs
/// agree within gap_tol in sup norm. All runs share one grid (dt chosen
/// from the finest index), so gaps are measured exactly. When the schedule
/// runs out first, the partial result is returned with `converged = false`.
pub fn peano_limit<F>(
    f: &F,
    w0: &Vector,
    horizon: f64,
    n_schedule: &[u32],
    gap_tol: f64,
) -> Result<PeanoLimitReport>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    if n_schedule.is_empty() {
        return Err(Error::InvalidParameter("n_schedule is empty".into()));
    }
    if n_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "n_schedule must be strictly increasing".into(),
        ));
    }
    if !(gap_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gap_tol must be > 0, got {gap_tol}"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be > 0, got {horizon}"
        )));
    }
    let n_max = *n_schedule.last().expect("nonempty");
    let steps = (2.0 * n_max as f64 * horizon).ceil().max(1.0);
    let dt = horizon / steps;

    let mut prev: Option<PeanoRun> = None;
    let mut achieved_gap = None;
    let mut converged = false;
    for &n in n_schedule {
        let run = peano_trajectory(f, w0, n, horizon, dt)?;
        if let Some(p) = &prev {
            let gap = peano_gap(p, &run)?.g_sup;
            achieved_gap = Some(gap);
            if gap <= gap_tol {
                prev = Some(run);
                converged = true;
                break;
            }
        }
        prev = Some(run);
    }
    let run = prev.expect("schedule is nonempty");
    let integral_residual = undelayed_residual(f, &run)?;
    Ok(PeanoLimitReport {
        run,
        achieved_gap,
        converged,
        integral_residual,
    })
}

fn undelayed_residual<F>(f: &F, run: &PeanoRun) -> Result<f64>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let dim = run.w0.dim();
    let mut partial = vec![0.0; dim];
    let mut worst = 0.0_f64;
    for j in 0..run.samples.len() {
        let state = &run.samples[j].state;
        let mut dev = 0.0;
        for i in 0..dim {
            let predicted = run.w0[i] - partial[i];
            dev += (state[i] - predicted) * (state[i] - predicted);
        }
        worst = worst.max(dev.sqrt());
        if j + 1 < run.samples.len() {
            let fv = f(state)?;
            for i in 0..dim {
                partial[i] += run.dt * fv[i];
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::integrator::{solve_cauchy, CauchyProblem, IntegratorConfig, Method, StopCriteria};
    use crate::schedule::EpsilonSchedule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn identity_field(w: &Vector) -> Result<Vector> {
        Ok(w.clone())
    }

    fn scalar(x: f64) -> Vector {
        Vector::new(vec![x]).unwrap()
    }

    #[test]
    fn first_delay_interval_is_exact() {
        // dw/dt = -w from w0 = 1: on [0, 1/n] the integrand is F(w0) = 1,
        // so w(t) = 1 - t without quadrature error.
        let run = peano_trajectory(&identity_field, &scalar(1.0), 10, 1.0, 0.05).unwrap();
        assert!((run.samples[1].state[0] - 0.95).abs() <= 1e-15);
        assert!((run.samples[2].state[0] - 0.9).abs() <= 1e-12);
        assert!((run.samples[2].t - 0.1).abs() <= 1e-15);
    }

    #[test]
    fn large_n_approaches_exponential_decay() {
        let run = peano_trajectory(&identity_field, &scalar(1.0), 100, 1.0, 0.005).unwrap();
        let w1 = run.final_state()[0];
        let exact = (-1.0_f64).exp();
        assert!(
            (w1 - exact).abs() <= 2.0 * (0.01 + 0.005),
            "w(1) = {w1} vs {exact}"
        );
    }

    #[test]
    fn constant_field_ignores_the_delay() {
        let c = 0.3;
        let field = move |_w: &Vector| Vector::new(vec![c]);
        let a = peano_trajectory(&field, &scalar(2.0), 10, 1.0, 0.05).unwrap();
        let b = peano_trajectory(&field, &scalar(2.0), 160, 1.0, 0.05 / 16.0).unwrap();
        for s in &a.samples {
            assert!((s.state[0] - (2.0 - c * s.t)).abs() <= 1e-12);
        }
        let gap = peano_gap(&a, &b).unwrap();
        assert!(gap.g_sup <= 1e-12, "constant field gap {}", gap.g_sup);
    }

    #[test]
    fn identical_runs_have_zero_gap() {
        let a = peano_trajectory(&identity_field, &scalar(1.0), 20, 1.0, 0.025).unwrap();
        let b = peano_trajectory(&identity_field, &scalar(1.0), 20, 1.0, 0.025).unwrap();
        assert_eq!(peano_gap(&a, &b).unwrap().g_sup, 0.0);
    }

    #[test]
    fn gap_shrinks_as_delays_shrink() {
        let w0 = scalar(1.0);
        let coarse_a = peano_trajectory(&identity_field, &w0, 10, 1.0, 0.025).unwrap();
        let coarse_b = peano_trajectory(&identity_field, &w0, 20, 1.0, 0.025).unwrap();
        let fine_a = peano_trajectory(&identity_field, &w0, 40, 1.0, 0.00625).unwrap();
        let fine_b = peano_trajectory(&identity_field, &w0, 80, 1.0, 0.00625).unwrap();
        let g_coarse = peano_gap(&coarse_a, &coarse_b).unwrap().g_sup;
        let g_fine = peano_gap(&fine_a, &fine_b).unwrap().g_sup;
        assert!(g_fine < g_coarse, "gap {g_fine} !< {g_coarse}");
        assert!(g_coarse > 0.0);
    }

    #[test]
    fn doubling_both_indices_shrinks_the_gap() {
        // Shared grid for all four runs so the reports are comparable.
        let w0 = scalar(0.0);
        let entry = catalog::find("relu-1d").unwrap().unwrap();
        let field = flow_field(&entry.instance, 0.1);
        let dt = 1.0 / 160.0;
        let mut gaps = Vec::new();
        for (n, m) in [(10, 20), (20, 40), (40, 80)] {
            let a = peano_trajectory(&field, &w0, n, 1.0, dt).unwrap();
            let b = peano_trajectory(&field, &w0, m, 1.0, dt).unwrap();
            gaps.push(peano_gap(&a, &b).unwrap().g_sup);
        }
        assert!(gaps[1] <= gaps[0] + 1e-12, "{gaps:?}");
        assert!(gaps[2] <= gaps[1] + 1e-12, "{gaps:?}");
    }

    #[test]
    fn grid_too_coarse_for_delay_is_rejected() {
        let err = peano_trajectory(&identity_field, &scalar(1.0), 10, 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::GridDelayIncompatible { n: 10, .. }));
    }

    #[test]
    fn mismatched_runs_are_structured_errors() {
        let a = peano_trajectory(&identity_field, &scalar(1.0), 10, 1.0, 0.05).unwrap();
        let b = peano_trajectory(&identity_field, &scalar(2.0), 10, 1.0, 0.05).unwrap();
        assert!(matches!(peano_gap(&a, &b), Err(Error::MismatchedRuns(_))));
        let c = peano_trajectory(&identity_field, &scalar(1.0), 10, 1.0, 0.03).unwrap();
        assert!(matches!(peano_gap(&a, &c), Err(Error::MismatchedRuns(_))));
    }

    #[test]
    fn limit_matches_analytic_exponential() {
        let report = peano_limit(
            &identity_field,
            &scalar(1.0),
            1.0,
            &[10, 20, 40, 80, 160],
            1e-2,
        )
        .unwrap();
        assert!(report.converged);
        let worst = report
            .run
            .samples
            .iter()
            .map(|s| (s.state[0] - (-s.t).exp()).abs())
            .fold(0.0_f64, f64::max);
        assert!(worst <= 1e-2, "sup error {worst}");
        assert!(report.integral_residual <= INTEGRAL_RESIDUAL_FACTOR * 1e-2);
    }

    #[test]
    fn limit_flags_exhausted_schedule() {
        let report =
            peano_limit(&identity_field, &scalar(1.0), 1.0, &[10, 20], 1e-9).unwrap();
        assert!(!report.converged);
        assert!(report.achieved_gap.unwrap() > 1e-9);
    }

    #[test]
    fn limit_with_single_entry_reports_no_gap() {
        let report = peano_limit(&identity_field, &scalar(1.0), 1.0, &[50], 1e-2).unwrap();
        assert!(!report.converged);
        assert!(report.achieved_gap.is_none());
    }

    #[test]
    fn limit_agrees_with_ode_solver_across_catalog() {
        // Same flow, two constructions: the delayed-integral limit and rk4.
        let eps = 0.1;
        let horizon = 2.0;
        let gap_tol = 1e-3;
        for entry in catalog::monotone().unwrap() {
            let w0 = Vector::zeros(entry.instance.dimension).unwrap();
            let field = flow_field(&entry.instance, eps);
            let report =
                peano_limit(&field, &w0, horizon, &[40, 80, 160, 320], gap_tol).unwrap();
            let problem = CauchyProblem::new(
                entry.instance.clone(),
                EpsilonSchedule::constant(eps).unwrap(),
                w0.clone(),
            )
            .unwrap();
            let cfg = IntegratorConfig::new(Method::Rk4, report.run.dt).unwrap();
            let stop = StopCriteria::new(1e-14, 1e6, horizon).unwrap();
            let (traj, _) = solve_cauchy(&problem, &cfg, &stop).unwrap();
            let mut worst = 0.0_f64;
            for s in &traj.samples {
                let p = report.run.state_near(s.t);
                worst = worst.max(p.distance(&s.state).unwrap());
            }
            let allowed = gap_tol.max(10.0 * report.run.dt);
            assert!(
                worst <= allowed,
                "{}: solver gap {worst} > {allowed}",
                entry.name
            );
        }
    }

    #[test]
    fn early_trajectory_is_locally_bounded_by_sampled_speed() {
        // ||w(t) - w0|| <= (c + tol) t for t <= r/c, with c the sampled max
        // of ||F|| over the ball of radius r around w0.
        let entry = catalog::find("relu-1d").unwrap().unwrap();
        let eps = 0.1;
        let field = flow_field(&entry.instance, eps);
        let w0 = scalar(0.0);
        let r = 1.0;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut c = 0.0_f64;
        for _ in 0..2000 {
            let p = scalar(w0[0] + rng.gen_range(-r..=r));
            c = c.max(field(&p).unwrap().norm());
        }
        for n in [10, 40, 160] {
            let run = peano_trajectory(&field, &w0, n, 1.0, 0.5 / n as f64).unwrap();
            for s in &run.samples {
                if s.t <= r / c {
                    let drift = s.state.distance(&w0).unwrap();
                    assert!(
                        drift <= (c + 1e-9) * s.t + 1e-12,
                        "n={n} t={}: drift {drift} vs c*t {}",
                        s.t,
                        c * s.t
                    );
                }
            }
        }
    }

    #[test]
    fn limit_trajectory_shifts_are_nonexpansive() {
        // ||w(t+h) - w(t)|| <= ||w(h) - w(0)|| for the limit of a monotone
        // flow, up to discretization slack.
        let entry = catalog::find("relu-1d").unwrap().unwrap();
        let field = flow_field(&entry.instance, 0.1);
        let w0 = scalar(0.0);
        let report = peano_limit(&field, &w0, 2.0, &[20, 40, 80, 160], 1e-3).unwrap();
        let samples = &report.run.samples;
        for shift_steps in [4_usize, 40, 120] {
            let g0 = samples[shift_steps].state.distance(&samples[0].state).unwrap();
            for j in 0..samples.len() - shift_steps {
                let g = samples[j + shift_steps]
                    .state
                    .distance(&samples[j].state)
                    .unwrap();
                assert!(
                    g <= g0 + 1e-3 * (1.0 + g0),
                    "shift {shift_steps} at j={j}: {g} > {g0}"
                );
            }
        }
    }
}
