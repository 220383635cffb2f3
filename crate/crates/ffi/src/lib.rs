//! C ABI over the solver core.
//!
//! Conventions, mirrored in the generated `include/dsm.h`:
//! - every fallible call returns a `DsmStatus`; `Ok` is 0
//! - handles written through `out` parameters are owned by the caller and
//!   must be released with the matching `dsm_*_free`
//! - `dsm_last_error` describes the most recent failure on the calling
//!   thread; the pointer stays valid until the next failing call there
//! - no call keeps a reference to caller memory after it returns

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dsm_core::catalog;
use dsm_core::error::Error;
use dsm_core::hilbert::Vector;
use dsm_core::integrator::{
    solve_cauchy, CauchyProblem, IntegratorConfig, Method, SolveReport, SolveStatus, StopCriteria,
};
use dsm_core::operator::{OperatorInstance, OperatorSpec};
use dsm_core::oracle::{minimal_norm_oracle, OracleOutcome};
use dsm_core::schedule::EpsilonSchedule;
use nalgebra::DMatrix;

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsmStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// No catalog operator with the requested name.
    UnknownOperator = 3,
    /// A scalar or shape argument violates its documented constraint.
    InvalidArgument = 4,
    /// Buffer or vector length disagrees with the operator dimension.
    DimensionMismatch = 5,
    /// Operator evaluation left the representable range.
    EvalOverflow = 6,
    /// The integrator could not finish (for example step underflow).
    SolveFailed = 7,
    /// Unexpected internal failure; details via `dsm_last_error`.
    Internal = 8,
}

/// Monotone map B together with its catalog metadata. Opaque.
pub struct DsmOperator {
    inner: OperatorInstance,
}

/// Regularization schedule eps(t). Opaque.
pub struct DsmSchedule {
    inner: EpsilonSchedule,
}

/// Outcome of one integration run. Opaque.
pub struct DsmSolveReport {
    inner: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    // Interior NULs cannot come from our error formatting; replace defensively.
    let clean = message.replace('\0', "?");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn fail(status: DsmStatus, message: &str) -> DsmStatus {
    set_last_error(message);
    status
}

fn fail_with(err: &Error) -> DsmStatus {
    let status = match err {
        Error::DimensionMismatch { .. } => DsmStatus::DimensionMismatch,
        Error::EvalOverflow { .. } => DsmStatus::EvalOverflow,
        Error::StepUnderflow { .. } => DsmStatus::SolveFailed,
        Error::NonFinite { .. }
        | Error::EmptyVector
        | Error::InvalidParameter(_)
        | Error::NegativeTime(_) => DsmStatus::InvalidArgument,
        _ => DsmStatus::Internal,
    };
    fail(status, &err.to_string())
}

/// Runs `body`, converting any panic into `Internal` so unwinding never
/// crosses the C boundary.
fn guarded(body: impl FnOnce() -> DsmStatus) -> DsmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(DsmStatus::Internal, "internal panic"),
    }
}

/// Message for the most recent failure on this thread, empty string if none.
/// Valid until the next failing dsm_* call on the same thread.
#[no_mangle]
pub extern "C" fn dsm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dsm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn str_arg<'a>(ptr: *const c_char) -> Result<&'a str, DsmStatus> {
    if ptr.is_null() {
        return Err(fail(DsmStatus::NullArgument, "string argument is null"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(DsmStatus::InvalidUtf8, "string argument is not UTF-8"))
}

/// Builds the named catalog operator. `out` receives an owned handle.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsm_operator_from_catalog(
    name: *const c_char,
    out: *mut *mut DsmOperator,
) -> DsmStatus {
    guarded(|| {
        if out.is_null() {
            return fail(DsmStatus::NullArgument, "out is null");
        }
        let name = match str_arg(name) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match catalog::find(name) {
            Ok(Some(entry)) => {
                *out = Box::into_raw(Box::new(DsmOperator {
                    inner: entry.instance,
                }));
                DsmStatus::Ok
            }
            Ok(None) => fail(
                DsmStatus::UnknownOperator,
                &format!("no catalog operator named '{name}'"),
            ),
            Err(e) => fail_with(&e),
        }
    })
}

/// Builds B(u) = M u - f from a row-major `dimension x dimension` matrix `M`
/// and a shift `f` of length `dimension`. The symmetric part of `M` must be
/// positive semidefinite; anything else is rejected as `InvalidArgument`.
///
/// # Safety
/// `matrix_row_major` must point to `dimension * dimension` doubles, `shift`
/// to `dimension` doubles, and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsm_operator_affine(
    dimension: usize,
    matrix_row_major: *const f64,
    shift: *const f64,
    out: *mut *mut DsmOperator,
) -> DsmStatus {
    guarded(|| {
        if matrix_row_major.is_null() || shift.is_null() || out.is_null() {
            return fail(DsmStatus::NullArgument, "matrix, shift, and out must be non-null");
        }
        if dimension == 0 {
            return fail(DsmStatus::InvalidArgument, "dimension must be >= 1");
        }
        let entries = std::slice::from_raw_parts(matrix_row_major, dimension * dimension);
        let shift = std::slice::from_raw_parts(shift, dimension);
        let shift = match Vector::new(shift.to_vec()) {
            Ok(v) => v,
            Err(e) => return fail_with(&e),
        };
        let spec = OperatorSpec::Affine {
            matrix: DMatrix::from_row_slice(dimension, dimension, entries),
            shift,
        };
        match OperatorInstance::new(spec, None) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DsmOperator { inner }));
                DsmStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Writes the operator's dimension n.
///
/// # Safety
/// `op` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsm_operator_dimension(
    op: *const DsmOperator,
    out: *mut usize,
) -> DsmStatus {
    guarded(|| {
        if op.is_null() || out.is_null() {
            return fail(DsmStatus::NullArgument, "op and out must be non-null");
        }
        *out = (*op).inner.dimension;
        DsmStatus::Ok
    })
}

/// Evaluates B(u) into `out`. Both buffers must have length `len`, and `len`
/// must equal the operator dimension.
///
/// # Safety
/// `op` must be a live handle; `input` and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dsm_operator_apply(
    op: *const DsmOperator,
    input: *const f64,
    len: usize,
    out: *mut f64,
) -> DsmStatus {
    guarded(|| {
        if op.is_null() || input.is_null() || out.is_null() {
            return fail(DsmStatus::NullArgument, "op, input, and out must be non-null");
        }
        let op = &(*op).inner;
        if len != op.dimension {
            return fail(
                DsmStatus::DimensionMismatch,
                &format!("expected length {}, got {len}", op.dimension),
            );
        }
        let u = match Vector::new(std::slice::from_raw_parts(input, len).to_vec()) {
            Ok(v) => v,
            Err(e) => return fail_with(&e),
        };
        match op.apply(&u) {
            Ok(value) => {
                std::slice::from_raw_parts_mut(out, len).copy_from_slice(value.as_slice());
                DsmStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Writes the minimal-norm solution of B(y) = 0 into `out` when one is
/// certified (catalog metadata first, otherwise the solvability oracle) and
/// sets `*found` accordingly. `found = false` with status `Ok` means no
/// solution exists or no certificate is available; `out` is left untouched.
///
/// # Safety
/// `op` must be a live handle, `out` must point to `len` doubles, `found`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsm_minimal_norm(
    op: *const DsmOperator,
    out: *mut f64,
    len: usize,
    found: *mut bool,
) -> DsmStatus {
    guarded(|| {
        if op.is_null() || out.is_null() || found.is_null() {
            return fail(DsmStatus::NullArgument, "op, out, and found must be non-null");
        }
        let op = &(*op).inner;
        if len != op.dimension {
            return fail(
                DsmStatus::DimensionMismatch,
                &format!("expected length {}, got {len}", op.dimension),
            );
        }
        *found = false;
        if let Some(y) = op.known_y() {
            std::slice::from_raw_parts_mut(out, len).copy_from_slice(y.as_slice());
            *found = true;
            return DsmStatus::Ok;
        }
        if let Some(meta) = &op.known_solution_set {
            if !meta.has_solution {
                return DsmStatus::Ok;
            }
        }
        match minimal_norm_oracle(op) {
            Ok(OracleOutcome::MinimalNorm(y)) => {
                std::slice::from_raw_parts_mut(out, len).copy_from_slice(y.as_slice());
                *found = true;
                DsmStatus::Ok
            }
            Ok(OracleOutcome::NoSolution) | Ok(OracleOutcome::NoOracle) => DsmStatus::Ok,
            Err(e) => fail_with(&e),
        }
    })
}

/// Releases an operator handle. Null is a no-op.
///
/// # Safety
/// `op` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn dsm_operator_free(op: *mut DsmOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Builds the constant schedule eps(t) = eps, eps > 0.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsm_schedule_constant(eps: f64, out: *mut *mut DsmSchedule) -> DsmStatus {
    guarded(|| {
        if out.is_null() {
            return fail(DsmStatus::NullArgument, "out is null");
        }
        match EpsilonSchedule::constant(eps) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DsmSchedule { inner }));
                DsmStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Builds the decaying schedule eps(t) = c1 / (c0 + t)^b with c0, c1 > 0 and
/// 0 < b < 1.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsm_schedule_power_law(
    c0: f64,
    c1: f64,
    b: f64,
    out: *mut *mut DsmSchedule,
) -> DsmStatus {
    guarded(|| {
        if out.is_null() {
            return fail(DsmStatus::NullArgument, "out is null");
        }
        match EpsilonSchedule::power_law(c0, c1, b) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DsmSchedule { inner }));
                DsmStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Writes eps(t) for t >= 0.
///
/// # Safety
/// `schedule` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsm_schedule_eps(
    schedule: *const DsmSchedule,
    t: f64,
    out: *mut f64,
) -> DsmStatus {
    guarded(|| {
        if schedule.is_null() || out.is_null() {
            return fail(DsmStatus::NullArgument, "schedule and out must be non-null");
        }
        match (*schedule).inner.eps(t) {
            Ok(value) => {
                *out = value;
                DsmStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Releases a schedule handle. Null is a no-op.
///
/// # Safety
/// `schedule` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn dsm_schedule_free(schedule: *mut DsmSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Integrates du/dt = -(B(u) + eps(t) u) from `initial` at t = 0 and returns
/// a report handle. Stopping rules are checked in the order converged
/// (residual <= residual_tol), diverged (||u|| > divergence_bound), horizon
/// (t >= t_max). `method` is "euler", "rk4", or "rk4-adaptive"; null selects
/// "rk4". `dt` is the fixed step (initial step for the adaptive method).
///
/// # Safety
/// `op` and `schedule` must be live handles, `initial` must point to `len`
/// doubles, `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsm_solve(
    op: *const DsmOperator,
    schedule: *const DsmSchedule,
    initial: *const f64,
    len: usize,
    method: *const c_char,
    dt: f64,
    residual_tol: f64,
    divergence_bound: f64,
    t_max: f64,
    out: *mut *mut DsmSolveReport,
) -> DsmStatus {
    guarded(|| {
        if op.is_null() || schedule.is_null() || initial.is_null() || out.is_null() {
            return fail(
                DsmStatus::NullArgument,
                "op, schedule, initial, and out must be non-null",
            );
        }
        let method = if method.is_null() {
            Method::Rk4
        } else {
            let name = match str_arg(method) {
                Ok(s) => s,
                Err(status) => return status,
            };
            match Method::parse(name) {
                Ok(m) => m,
                Err(e) => return fail_with(&e),
            }
        };
        let initial = match Vector::new(std::slice::from_raw_parts(initial, len).to_vec()) {
            Ok(v) => v,
            Err(e) => return fail_with(&e),
        };
        let problem = match CauchyProblem::new((*op).inner.clone(), (*schedule).inner, initial) {
            Ok(p) => p,
            Err(e) => return fail_with(&e),
        };
        let cfg = match IntegratorConfig::new(method, dt) {
            Ok(c) => c,
            Err(e) => return fail_with(&e),
        };
        let stop = match StopCriteria::new(residual_tol, divergence_bound, t_max) {
            Ok(s) => s,
            Err(e) => return fail_with(&e),
        };
        match solve_cauchy(&problem, &cfg, &stop) {
            Ok((_, report)) => {
                *out = Box::into_raw(Box::new(DsmSolveReport { inner: report }));
                DsmStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Termination kind: 0 converged, 1 horizon reached, 2 diverged, -1 on null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dsm_report_status(report: *const DsmSolveReport) -> c_int {
    if report.is_null() {
        return -1;
    }
    match (*report).inner.status {
        SolveStatus::Converged => 0,
        SolveStatus::HorizonReached => 1,
        SolveStatus::Diverged => 2,
    }
}

/// Writes the dimension of the report's limit estimate.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsm_report_dimension(
    report: *const DsmSolveReport,
    out: *mut usize,
) -> DsmStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(DsmStatus::NullArgument, "report and out must be non-null");
        }
        *out = (*report).inner.limit_estimate.dim();
        DsmStatus::Ok
    })
}

/// Copies the limit estimate (the final state) into `out`; `len` must equal
/// the report dimension.
///
/// # Safety
/// `report` must be a live handle; `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dsm_report_limit(
    report: *const DsmSolveReport,
    out: *mut f64,
    len: usize,
) -> DsmStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(DsmStatus::NullArgument, "report and out must be non-null");
        }
        let limit = &(*report).inner.limit_estimate;
        if len != limit.dim() {
            return fail(
                DsmStatus::DimensionMismatch,
                &format!("expected length {}, got {len}", limit.dim()),
            );
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(limit.as_slice());
        DsmStatus::Ok
    })
}

/// Writes ||B(u) + eps u|| at the final state.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsm_report_final_residual(
    report: *const DsmSolveReport,
    out: *mut f64,
) -> DsmStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(DsmStatus::NullArgument, "report and out must be non-null");
        }
        *out = (*report).inner.final_residual;
        DsmStatus::Ok
    })
}

/// Writes the number of accepted integration steps.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsm_report_steps(
    report: *const DsmSolveReport,
    out: *mut u64,
) -> DsmStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(DsmStatus::NullArgument, "report and out must be non-null");
        }
        *out = (*report).inner.steps_taken;
        DsmStatus::Ok
    })
}

/// Releases a report handle. Null is a no-op.
///
/// # Safety
/// `report` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn dsm_report_free(report: *mut DsmSolveReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
