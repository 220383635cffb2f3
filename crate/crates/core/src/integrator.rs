//! Explicit integration of the regularized flow du/dt = -B(u) - eps(t) u.
//! The flows are dissipative (monotone B gives a one-sided Lipschitz field
//! with negative constant), so explicit steppers with modest dt suffice.
//!
//! The residual ||B(u) + eps(t) u|| equals ||du/dt|| along exact
//! trajectories and is both the convergence stop criterion and the first
//! Runge-Kutta stage of the next step, so each step costs one extra operator
//! evaluation, not two.

use crate::error::{Error, Result};
use crate::hilbert::Vector;
use crate::operator::OperatorInstance;
use crate::schedule::EpsilonSchedule;
use serde::Serialize;

/// Flow problem: operator, schedule, start point.
#[derive(Debug, Clone)]
pub struct CauchyProblem {
    pub operator: OperatorInstance,
    pub schedule: EpsilonSchedule,
    pub initial: Vector,
}

impl CauchyProblem {
    pub fn new(
        operator: OperatorInstance,
        schedule: EpsilonSchedule,
        initial: Vector,
    ) -> Result<Self> {
        if initial.dim() != operator.dimension {
            return Err(Error::DimensionMismatch {
                expected: operator.dimension,
                got: initial.dim(),
            });
        }
        Ok(CauchyProblem {
            operator,
            schedule,
            initial,
        })
    }

    /// -B(u) - eps(t) u.
    pub fn rhs(&self, t: f64, u: &Vector) -> Result<Vector> {
        let eps = self.schedule.eps(t)?;
        let b = self.operator.apply(u)?;
        let mut out = Vec::with_capacity(u.dim());
        for i in 0..u.dim() {
            out.push(-b[i] - eps * u[i]);
        }
        Ok(Vector::from_checked(out))
    }

    /// ||B(u) + eps(t) u||, i.e. the speed ||du/dt|| of the exact flow.
    pub fn residual(&self, t: f64, u: &Vector) -> Result<f64> {
        Ok(self.rhs(t, u)?.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Euler,
    Rk4,
    Rk4Adaptive,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Euler => "euler",
            Method::Rk4 => "rk4",
            Method::Rk4Adaptive => "rk4-adaptive",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            "rk4-adaptive" => Ok(Method::Rk4Adaptive),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected euler, rk4, or rk4-adaptive)"
            ))),
        }
    }
}

/// Discretization parameters. `dt` is the fixed step for euler/rk4 and the
/// initial trial step for rk4-adaptive.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    /// Step-doubling safety factor (adaptive only).
    pub safety: f64,
    /// Local truncation error target per step (adaptive only).
    pub local_tol: f64,
}

impl IntegratorConfig {
    pub fn new(method: Method, dt: f64) -> Result<Self> {
        let cfg = IntegratorConfig {
            method,
            dt,
            safety: 0.9,
            local_tol: 1e-8,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "safety factor must lie in (0,1], got {}",
                self.safety
            )));
        }
        if !(self.local_tol.is_finite() && self.local_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "local_tol must be > 0, got {}",
                self.local_tol
            )));
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk4,
            dt: 0.01,
            safety: 0.9,
            local_tol: 1e-8,
        }
    }
}

/// Termination rules, checked in order: converged, diverged, horizon.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StopCriteria {
    /// Stop as converged when the residual drops to this level.
    pub residual_tol: f64,
    /// Abort as diverged when ||u|| exceeds this bound.
    pub divergence_bound: f64,
    /// Integration horizon.
    pub t_max: f64,
}

impl StopCriteria {
    pub fn new(residual_tol: f64, divergence_bound: f64, t_max: f64) -> Result<Self> {
        let stop = StopCriteria {
            residual_tol,
            divergence_bound,
            t_max,
        };
        stop.validate()?;
        Ok(stop)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol.is_finite() && self.residual_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "residual_tol must be > 0, got {}",
                self.residual_tol
            )));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "divergence_bound must be > 0, got {}",
                self.divergence_bound
            )));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_max must be > 0, got {}",
                self.t_max
            )));
        }
        Ok(())
    }
}

/// One stored point of the discrete flow. The residual is recomputed from
/// the stored state, never carried over from an earlier stage.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub state: Vector,
    pub residual: f64,
    pub eps: f64,
}

/// Time-ordered samples. `stride` records the step-thinning policy: every
/// stride-th accepted step is stored (plus the final state).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub stride: u64,
}

impl Trajectory {
    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory is never empty")
    }

    /// The uniform spacing of the stored grid, if it is uniform.
    pub fn uniform_spacing(&self) -> Option<f64> {
        if self.samples.len() < 2 {
            return None;
        }
        let h = self.samples[1].t - self.samples[0].t;
        for w in self.samples.windows(2) {
            let d = w[1].t - w[0].t;
            if (d - h).abs() > 1e-9 * h.max(1.0) {
                return None;
            }
        }
        Some(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    HorizonReached,
    Diverged,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::HorizonReached => "horizon-reached",
            SolveStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub limit_estimate: Vector,
    pub final_residual: f64,
    pub steps_taken: u64,
    pub wall_notes: String,
}

/// Explicit Euler step; dt = 0 returns the state unchanged.
pub fn step_euler<F>(state: &Vector, t: f64, dt: f64, rhs: &mut F) -> Result<Vector>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let k1 = rhs(t, state)?;
    Ok(euler_update(state, dt, &k1))
}

/// Classical four-stage Runge-Kutta step; dt = 0 returns the state unchanged.
pub fn step_rk4<F>(state: &Vector, t: f64, dt: f64, rhs: &mut F) -> Result<Vector>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let k1 = rhs(t, state)?;
    rk4_update(state, t, dt, &k1, rhs)
}

fn euler_update(state: &Vector, dt: f64, k1: &Vector) -> Vector {
    let out = state
        .iter()
        .zip(k1.iter())
        .map(|(u, k)| u + dt * k)
        .collect();
    Vector::from_checked(out)
}

/// RK4 update reusing an already-computed first stage.
fn rk4_update<F>(state: &Vector, t: f64, dt: f64, k1: &Vector, rhs: &mut F) -> Result<Vector>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let half = 0.5 * dt;
    let mid1 = euler_update(state, half, k1);
    let k2 = rhs(t + half, &mid1)?;
    let mid2 = euler_update(state, half, &k2);
    let k3 = rhs(t + half, &mid2)?;
    let end = euler_update(state, dt, &k3);
    let k4 = rhs(t + dt, &end)?;
    let sixth = dt / 6.0;
    let out = (0..state.dim())
        .map(|i| state[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    Ok(Vector::from_checked(out))
}

/// Collects samples, storing every stride-th step to bound memory.
struct SampleStore {
    samples: Vec<Sample>,
    stride: u64,
}

const MAX_STORED_SAMPLES: usize = 100_000;

impl SampleStore {
    fn with_planned_steps(n_steps: u64) -> SampleStore {
        let stride = (n_steps / MAX_STORED_SAMPLES as u64).max(1);
        let stride = if n_steps % MAX_STORED_SAMPLES as u64 != 0 && stride > 1 {
            stride + 1
        } else {
            stride
        };
        SampleStore {
            samples: Vec::new(),
            stride,
        }
    }

    fn adaptive() -> SampleStore {
        SampleStore {
            samples: Vec::new(),
            stride: 1,
        }
    }

    fn offer(&mut self, step_index: u64, sample: Sample) {
        if step_index % self.stride == 0 {
            self.samples.push(sample);
            if self.samples.len() > MAX_STORED_SAMPLES {
                // Halve resolution: keep every other sample, double stride.
                let mut kept = Vec::with_capacity(self.samples.len() / 2 + 1);
                for (i, s) in self.samples.drain(..).enumerate() {
                    if i % 2 == 0 {
                        kept.push(s);
                    }
                }
                self.samples = kept;
                self.stride *= 2;
            }
        }
    }

    /// The final state is always part of the trajectory.
    fn force_last(&mut self, sample: Sample) {
        match self.samples.last() {
            Some(s) if s.t == sample.t => {}
            _ => self.samples.push(sample),
        }
    }

    fn into_trajectory(self) -> Trajectory {
        Trajectory {
            samples: self.samples,
            stride: self.stride,
        }
    }
}

enum StopCheck {
    Continue,
    Stop(SolveStatus),
}

fn check_stop(stop: &StopCriteria, t: f64, state: &Vector, residual: f64) -> StopCheck {
    // Converged is checked before diverged so the report invariant
    // (converged iff final residual at or below tolerance) is unambiguous.
    if residual <= stop.residual_tol {
        return StopCheck::Stop(SolveStatus::Converged);
    }
    if state.norm() > stop.divergence_bound {
        return StopCheck::Stop(SolveStatus::Diverged);
    }
    if t >= stop.t_max {
        return StopCheck::Stop(SolveStatus::HorizonReached);
    }
    StopCheck::Continue
}

/// Integrates the flow from t = 0, stopping at the first satisfied
/// criterion. Identical inputs produce bit-identical trajectories.
pub fn solve_cauchy(
    problem: &CauchyProblem,
    cfg: &IntegratorConfig,
    stop: &StopCriteria,
) -> Result<(Trajectory, SolveReport)> {
    cfg.validate()?;
    stop.validate()?;
    let initial_norm = problem.initial.norm();
    if stop.divergence_bound <= initial_norm {
        return Err(Error::InvalidParameter(format!(
            "divergence_bound {} must exceed the initial norm {initial_norm}",
            stop.divergence_bound
        )));
    }
    match cfg.method {
        Method::Euler | Method::Rk4 => solve_fixed(problem, cfg, stop),
        Method::Rk4Adaptive => solve_adaptive(problem, cfg, stop),
    }
}

fn solve_fixed(
    problem: &CauchyProblem,
    cfg: &IntegratorConfig,
    stop: &StopCriteria,
) -> Result<(Trajectory, SolveReport)> {
    let mut rhs = |t: f64, u: &Vector| problem.rhs(t, u);
    let n_steps = (stop.t_max / cfg.dt).ceil().max(1.0) as u64;
    let mut store = SampleStore::with_planned_steps(n_steps);

    let mut state = problem.initial.clone();
    let mut rhs_now = rhs(0.0, &state)?;
    let mut residual = rhs_now.norm();
    let mut t = 0.0;
    let mut steps: u64 = 0;
    store.offer(
        0,
        Sample {
            t,
            state: state.clone(),
            residual,
            eps: problem.schedule.eps(t)?,
        },
    );

    let mut status = loop {
        if let StopCheck::Stop(s) = check_stop(stop, t, &state, residual) {
            break s;
        }
        if steps == n_steps {
            // Guard: float edge where t_max was not quite reached.
            break SolveStatus::HorizonReached;
        }
        let k = steps + 1;
        let t_next = if k == n_steps {
            stop.t_max
        } else {
            k as f64 * cfg.dt
        };
        let dt = t_next - t;
        state = match cfg.method {
            Method::Euler => euler_update(&state, dt, &rhs_now),
            Method::Rk4 => rk4_update(&state, t, dt, &rhs_now, &mut rhs)?,
            Method::Rk4Adaptive => unreachable!("fixed-step path"),
        };
        t = t_next;
        steps = k;
        rhs_now = rhs(t, &state)?;
        residual = rhs_now.norm();
        store.offer(
            steps,
            Sample {
                t,
                state: state.clone(),
                residual,
                eps: problem.schedule.eps(t)?,
            },
        );
    };
    // Status invariant: converged wins whenever the residual qualifies.
    if residual <= stop.residual_tol {
        status = SolveStatus::Converged;
    }
    store.force_last(Sample {
        t,
        state: state.clone(),
        residual,
        eps: problem.schedule.eps(t)?,
    });
    let trajectory = store.into_trajectory();
    let wall_notes = format!(
        "{} fixed dt={}, {steps} steps, stride {}",
        cfg.method.name(),
        cfg.dt,
        trajectory.stride
    );
    Ok((
        trajectory,
        SolveReport {
            status,
            limit_estimate: state,
            final_residual: residual,
            steps_taken: steps,
            wall_notes,
        },
    ))
}

fn solve_adaptive(
    problem: &CauchyProblem,
    cfg: &IntegratorConfig,
    stop: &StopCriteria,
) -> Result<(Trajectory, SolveReport)> {
    let mut rhs = |t: f64, u: &Vector| problem.rhs(t, u);
    let mut store = SampleStore::adaptive();

    let mut state = problem.initial.clone();
    let mut rhs_now = rhs(0.0, &state)?;
    let mut residual = rhs_now.norm();
    let mut t = 0.0;
    let mut dt = cfg.dt;
    let mut accepted: u64 = 0;
    let mut rejected: u64 = 0;
    store.offer(
        0,
        Sample {
            t,
            state: state.clone(),
            residual,
            eps: problem.schedule.eps(t)?,
        },
    );

    let mut status = loop {
        if let StopCheck::Stop(s) = check_stop(stop, t, &state, residual) {
            break s;
        }
        dt = dt.min(stop.t_max - t);
        if dt <= f64::EPSILON * t.max(1.0) {
            break SolveStatus::HorizonReached;
        }
        // Step doubling: one full step vs two half steps; the scaled gap is
        // a fourth-order error estimate.
        let trial = (|| -> Result<(Vector, Vector)> {
            let big = rk4_update(&state, t, dt, &rhs_now, &mut rhs)?;
            let half = 0.5 * dt;
            let mid = rk4_update(&state, t, half, &rhs_now, &mut rhs)?;
            let k1_mid = rhs(t + half, &mid)?;
            let small = rk4_update(&mid, t + half, half, &k1_mid, &mut rhs)?;
            Ok((big, small))
        })();
        let (big, small) = match trial {
            Ok(pair) => pair,
            Err(Error::EvalOverflow { .. }) => {
                // Trial step left the operator's numeric range: treat as an
                // oversized step, not a fatal error.
                rejected += 1;
                dt *= 0.2;
                if dt < 1e-13 * t.max(1.0) {
                    return Err(Error::StepUnderflow { t, dt });
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let err = big.distance(&small)? / 15.0;
        if err <= cfg.local_tol {
            t += dt;
            accepted += 1;
            state = small;
            rhs_now = rhs(t, &state)?;
            residual = rhs_now.norm();
            store.offer(
                accepted,
                Sample {
                    t,
                    state: state.clone(),
                    residual,
                    eps: problem.schedule.eps(t)?,
                },
            );
            let factor = if err == 0.0 {
                5.0
            } else {
                (cfg.safety * (cfg.local_tol / err).powf(0.2)).clamp(0.2, 5.0)
            };
            dt *= factor;
        } else {
            rejected += 1;
            let factor = (cfg.safety * (cfg.local_tol / err).powf(0.2)).clamp(0.2, 1.0);
            dt *= factor;
            if dt < 1e-13 * t.max(1.0) {
                return Err(Error::StepUnderflow { t, dt });
            }
        }
    };
    if residual <= stop.residual_tol {
        status = SolveStatus::Converged;
    }
    store.force_last(Sample {
        t,
        state: state.clone(),
        residual,
        eps: problem.schedule.eps(t)?,
    });
    let trajectory = store.into_trajectory();
    let wall_notes = format!(
        "rk4-adaptive initial dt={}, {accepted} accepted / {rejected} rejected steps, stride {}",
        cfg.dt, trajectory.stride
    );
    Ok((
        trajectory,
        SolveReport {
            status,
            limit_estimate: state,
            final_residual: residual,
            steps_taken: accepted,
            wall_notes,
        },
    ))
}
