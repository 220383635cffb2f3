//! Executable checks for the decay, boundedness, and convergence claims the
//! flow trajectories are supposed to satisfy.
//!
//! Margin convention: every check reports worst_margin = min over its
//! evaluation points of (bound - observed) / scale, where scale is the bound
//! itself floored at 1e-12 * (1 + characteristic size) to keep stationary
//! trajectories (bound identically zero, observations at float-dust level)
//! from failing on roundoff. A check passes iff worst_margin >= -tolerance,
//! which for margins in the relative regime is exactly
//! observed <= bound * (1 + tolerance).
//!
//! Inconclusive is a first-class outcome, distinct from fail: it means the
//! data cannot support the check (too few samples, nonuniform grid,
//! unconverged path point), and it never silently counts as a pass.

use crate::error::{Error, Result};
use crate::hilbert::Vector;
use crate::integrator::Trajectory;
use serde::Serialize;

/// Relative scale floor for margins; see the module docs.
const MARGIN_FLOOR: f64 = 1e-12;

/// Default multiplicative slack absorbing discretization error.
pub const DEFAULT_DECAY_TOL: f64 = 1e-3;

/// Default shift offsets h for the shift-decay check.
pub const DEFAULT_SHIFT_OFFSETS: [f64; 3] = [0.1, 0.5, 1.0];

/// Default absolute threshold for the vanishing-residual check.
pub const DEFAULT_RESIDUAL_LEVEL: f64 = 1e-5;

/// Default final error threshold for the regularization-path check.
pub const DEFAULT_FINAL_TOL: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check_name: String,
    pub passed: bool,
    /// Most-violating (bound - observed) / scale over the check's points;
    /// negative means violation.
    pub worst_margin: f64,
    /// Time (or eps, for path checks) where the worst margin occurred.
    pub location: f64,
    pub tolerance_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InconclusiveNote {
    pub check_name: String,
    pub reason: String,
}

/// Outcome of one check: a decided pass/fail record, or inconclusive.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckOutcome {
    Decided(CheckRecord),
    Inconclusive(InconclusiveNote),
}

impl CheckOutcome {
    fn decided(name: &str, worst_margin: f64, location: f64, tolerance: f64) -> CheckOutcome {
        CheckOutcome::Decided(CheckRecord {
            check_name: name.to_string(),
            passed: worst_margin >= -tolerance,
            worst_margin,
            location,
            tolerance_used: tolerance,
        })
    }

    fn inconclusive(name: &str, reason: impl Into<String>) -> CheckOutcome {
        CheckOutcome::Inconclusive(InconclusiveNote {
            check_name: name.to_string(),
            reason: reason.into(),
        })
    }

    pub fn check_name(&self) -> &str {
        match self {
            CheckOutcome::Decided(r) => &r.check_name,
            CheckOutcome::Inconclusive(n) => &n.check_name,
        }
    }

    /// True only for a decided pass.
    pub fn passed(&self) -> bool {
        matches!(self, CheckOutcome::Decided(r) if r.passed)
    }

    pub fn failed(&self) -> bool {
        matches!(self, CheckOutcome::Decided(r) if !r.passed)
    }
}

/// Ordered check outcomes plus the overall verdict: overall is true iff
/// every decided record passed. Inconclusive outcomes are carried
/// separately and do not count as passes.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub records: Vec<CheckRecord>,
    pub inconclusive: Vec<InconclusiveNote>,
    pub overall: bool,
}

impl DiagnosticsReport {
    pub fn from_outcomes(outcomes: Vec<CheckOutcome>) -> DiagnosticsReport {
        let mut records = Vec::new();
        let mut inconclusive = Vec::new();
        for outcome in outcomes {
            match outcome {
                CheckOutcome::Decided(r) => records.push(r),
                CheckOutcome::Inconclusive(n) => inconclusive.push(n),
            }
        }
        let overall = records.iter().all(|r| r.passed);
        DiagnosticsReport {
            records,
            inconclusive,
            overall,
        }
    }
}

/// One point of the regularization path: the solved state at a fixed eps.
#[derive(Debug, Clone)]
pub struct RegPathPoint {
    pub eps: f64,
    pub v_eps: Vector,
    /// ||B(V) + eps V|| at the solved point.
    pub residual: f64,
}

struct MarginTracker {
    worst: f64,
    location: f64,
    floor: f64,
}

impl MarginTracker {
    fn new(scale_hint: f64) -> MarginTracker {
        MarginTracker {
            worst: f64::INFINITY,
            location: 0.0,
            floor: MARGIN_FLOOR * (1.0 + scale_hint),
        }
    }

    fn observe(&mut self, bound: f64, observed: f64, location: f64) {
        let margin = (bound - observed) / bound.max(self.floor);
        if margin < self.worst {
            self.worst = margin;
            self.location = location;
        }
    }

    fn finish(self, name: &str, tolerance: f64) -> CheckOutcome {
        let worst = if self.worst.is_finite() { self.worst } else { 0.0 };
        CheckOutcome::decided(name, worst, self.location, tolerance)
    }
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be > 0, got {value}"
        )));
    }
    Ok(())
}

/// Shift decay: ||w(t+h) - w(t)|| <= ||w(h) - w(0)|| e^(-eps t) for a
/// constant-eps flow. Needs a uniform sample grid with h on it.
pub fn check_shift_decay(
    traj: &Trajectory,
    eps: f64,
    h: f64,
    tol: f64,
) -> Result<CheckOutcome> {
    const NAME: &str = "shift-decay";
    require_positive("eps", eps)?;
    require_positive("h", h)?;
    require_positive("tol", tol)?;
    let Some(grid) = traj.uniform_spacing() else {
        return Ok(CheckOutcome::inconclusive(
            NAME,
            "trajectory grid is not uniform",
        ));
    };
    let steps = h / grid;
    let k = steps.round();
    if k < 1.0 || (steps - k).abs() > 1e-6 * steps.max(1.0) {
        return Ok(CheckOutcome::inconclusive(
            NAME,
            format!("shift {h} is not a multiple of the sample spacing {grid}"),
        ));
    }
    let k = k as usize;
    if traj.samples.len() < k + 2 {
        return Ok(CheckOutcome::inconclusive(
            NAME,
            "too few samples to form shifted pairs",
        ));
    }
    let g0 = traj.samples[k]
        .state
        .distance(&traj.samples[0].state)?;
    let t0 = traj.samples[0].t;
    let mut tracker = MarginTracker::new(g0);
    // j = 0 is the defining pair (bound equals observation); start at 1.
    for j in 1..traj.samples.len() - k {
        let g = traj.samples[j + k]
            .state
            .distance(&traj.samples[j].state)?;
        let t = traj.samples[j].t - t0;
        tracker.observe(g0 * (-eps * t).exp(), g, traj.samples[j].t);
    }
    Ok(tracker.finish(NAME, tol))
}

/// Derivative decay: residual(t) <= residual(0) e^(-eps t) for a
/// constant-eps flow. Grid uniformity is not required.
pub fn check_derivative_decay(traj: &Trajectory, eps: f64, tol: f64) -> Result<CheckOutcome> {
    const NAME: &str = "derivative-decay";
    require_positive("eps", eps)?;
    require_positive("tol", tol)?;
    if traj.samples.len() < 2 {
        return Ok(CheckOutcome::inconclusive(NAME, "fewer than two samples"));
    }
    let r0 = traj.samples[0].residual;
    let t0 = traj.samples[0].t;
    let mut tracker = MarginTracker::new(r0);
    for s in traj.samples.iter().skip(1) {
        tracker.observe(r0 * (-eps * (s.t - t0)).exp(), s.residual, s.t);
    }
    Ok(tracker.finish(NAME, tol))
}

/// Norm bound: ||V_eps|| <= ||y||, with slack ||y||(1+tol) + tol.
pub fn check_norm_bound(v_eps: &Vector, y: &Vector, tol: f64) -> Result<CheckOutcome> {
    const NAME: &str = "norm-bound";
    require_positive("tol", tol)?;
    if v_eps.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: y.dim(),
            got: v_eps.dim(),
        });
    }
    // margin >= -tol is exactly ||V|| <= ||y|| + tol (||y|| + 1).
    let margin = (y.norm() - v_eps.norm()) / (y.norm() + 1.0);
    Ok(CheckOutcome::decided(NAME, margin, 0.0, tol))
}

/// Regularization-path convergence: the error ||V_eps - y|| is nonincreasing
/// along decreasing eps (slack 1e-9), the final error is at or below
/// final_tol, and the norm bound holds at every point. Points whose solve
/// residual exceeds `solver_tol` make the outcome inconclusive.
pub fn check_regpath_convergence(
    path: &[RegPathPoint],
    y: &Vector,
    final_tol: f64,
    solver_tol: f64,
) -> Result<CheckOutcome> {
    const NAME: &str = "regpath-convergence";
    require_positive("final_tol", final_tol)?;
    require_positive("solver_tol", solver_tol)?;
    if path.len() < 3 {
        return Ok(CheckOutcome::inconclusive(
            NAME,
            format!("need at least 3 path points, got {}", path.len()),
        ));
    }
    for w in path.windows(2) {
        if w[1].eps >= w[0].eps {
            return Err(Error::InvalidParameter(
                "path eps values must strictly decrease".into(),
            ));
        }
    }
    for p in path {
        if p.residual > solver_tol {
            return Ok(CheckOutcome::inconclusive(
                NAME,
                format!(
                    "path point at eps={} did not converge (residual {:e})",
                    p.eps, p.residual
                ),
            ));
        }
    }
    let errors: Vec<f64> = path
        .iter()
        .map(|p| p.v_eps.distance(y))
        .collect::<Result<_>>()?;
    let mut tracker = MarginTracker::new(y.norm());
    for (i, w) in errors.windows(2).enumerate() {
        // Nonincreasing up to absolute slack 1e-9.
        tracker.observe(w[0] + 1e-9, w[1], path[i + 1].eps);
    }
    let last = *errors.last().expect("checked length");
    tracker.observe(final_tol, last, path.last().expect("nonempty").eps);
    for p in path {
        let margin = (y.norm() - p.v_eps.norm()) / (y.norm() + 1.0);
        if margin < tracker.worst {
            tracker.worst = margin;
            tracker.location = p.eps;
        }
    }
    Ok(tracker.finish(NAME, final_tol))
}

/// Boundedness along the decaying-eps flow:
/// ||u(t) - y|| <= max(||u0 - y||, ||y||).
pub fn check_boundedness(traj: &Trajectory, y: &Vector, tol: f64) -> Result<CheckOutcome> {
    const NAME: &str = "boundedness";
    require_positive("tol", tol)?;
    if traj.samples.is_empty() {
        return Ok(CheckOutcome::inconclusive(NAME, "empty trajectory"));
    }
    let q0 = traj.samples[0].state.distance(y)?;
    let bound = q0.max(y.norm());
    let mut tracker = MarginTracker::new(bound);
    for s in &traj.samples {
        tracker.observe(bound, s.state.distance(y)?, s.t);
    }
    Ok(tracker.finish(NAME, tol))
}

/// Vanishing residual: the residual over the final `window` of time stays
/// at or below `level`. The asymptotic residual rate is reported separately
/// by [`residual_rate_constant`], not asserted here.
pub fn check_residual_vanishes(
    traj: &Trajectory,
    window: f64,
    level: f64,
) -> Result<CheckOutcome> {
    const NAME: &str = "residual-vanishes";
    require_positive("window", window)?;
    require_positive("level", level)?;
    let t_end = traj.final_sample().t;
    if window >= t_end {
        return Ok(CheckOutcome::inconclusive(
            NAME,
            format!("window {window} does not fit inside the horizon {t_end}"),
        ));
    }
    let cut = t_end - window;
    let tail: Vec<_> = traj.samples.iter().filter(|s| s.t >= cut).collect();
    if tail.len() < 2 {
        return Ok(CheckOutcome::inconclusive(
            NAME,
            "fewer than two samples in the final window",
        ));
    }
    let mut tracker = MarginTracker::new(level);
    for s in tail {
        tracker.observe(level, s.residual, s.t);
    }
    Ok(tracker.finish(NAME, level))
}

/// Max of residual(t) * t over the last decade (t >= t_end / 10): the
/// measured constant for the asymptotic residual rate c / t.
pub fn residual_rate_constant(traj: &Trajectory) -> Option<f64> {
    let t_end = traj.final_sample().t;
    if t_end <= 0.0 {
        return None;
    }
    let cut = t_end / 10.0;
    let mut c: Option<f64> = None;
    for s in traj.samples.iter().filter(|s| s.t >= cut) {
        let v = s.residual * s.t;
        c = Some(c.map_or(v, |m: f64| m.max(v)));
    }
    c
}

/// Contraction: two trajectories of the same constant-eps problem satisfy
/// ||a(t) - b(t)|| <= ||a(0) - b(0)|| e^(-eps t) on shared sample times.
pub fn check_contraction(
    traj_a: &Trajectory,
    traj_b: &Trajectory,
    eps: f64,
    tol: f64,
) -> Result<CheckOutcome> {
    const NAME: &str = "contraction";
    require_positive("eps", eps)?;
    require_positive("tol", tol)?;
    let mut pairs = Vec::new();
    for (a, b) in traj_a.samples.iter().zip(traj_b.samples.iter()) {
        if a.t != b.t {
            break;
        }
        pairs.push((a, b));
    }
    if pairs.len() < 2 {
        return Err(Error::MismatchedRuns(
            "trajectories share fewer than two sample times".into(),
        ));
    }
    let (a0, b0) = pairs[0];
    let gap0 = a0.state.distance(&b0.state)?;
    let t0 = a0.t;
    let mut tracker = MarginTracker::new(gap0);
    for (a, b) in pairs.iter().skip(1) {
        let gap = a.state.distance(&b.state)?;
        tracker.observe(gap0 * (-eps * (a.t - t0)).exp(), gap, a.t);
    }
    Ok(tracker.finish(NAME, tol))
}
