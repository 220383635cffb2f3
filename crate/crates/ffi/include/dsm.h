/* C interface for the dsm solver library. */

#ifndef DSM_H
#define DSM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum DsmStatus {
  DsmStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  DsmStatus_NullArgument = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  DsmStatus_InvalidUtf8 = 2,
  /**
   * No catalog operator with the requested name.
   */
  DsmStatus_UnknownOperator = 3,
  /**
   * A scalar or shape argument violates its documented constraint.
   */
  DsmStatus_InvalidArgument = 4,
  /**
   * Buffer or vector length disagrees with the operator dimension.
   */
  DsmStatus_DimensionMismatch = 5,
  /**
   * Operator evaluation left the representable range.
   */
  DsmStatus_EvalOverflow = 6,
  /**
   * The integrator could not finish (for example step underflow).
   */
  DsmStatus_SolveFailed = 7,
  /**
   * Unexpected internal failure; details via `dsm_last_error`.
   */
  DsmStatus_Internal = 8,
} DsmStatus;

/**
 * Monotone map B together with its catalog metadata. Opaque.
 */
typedef struct DsmOperator DsmOperator;

/**
 * Regularization schedule eps(t). Opaque.
 */
typedef struct DsmSchedule DsmSchedule;

/**
 * Outcome of one integration run. Opaque.
 */
typedef struct DsmSolveReport DsmSolveReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, empty string if none.
 * Valid until the next failing dsm_* call on the same thread.
 */
const char *dsm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dsm_version(void);

/**
 * Builds the named catalog operator. `out` receives an owned handle.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DsmStatus dsm_operator_from_catalog(const char *name, struct DsmOperator **out);

/**
 * Builds B(u) = M u - f from a row-major `dimension x dimension` matrix `M`
 * and a shift `f` of length `dimension`. The symmetric part of `M` must be
 * positive semidefinite; anything else is rejected as `InvalidArgument`.
 *
 * # Safety
 * `matrix_row_major` must point to `dimension * dimension` doubles, `shift`
 * to `dimension` doubles, and `out` must be a valid pointer.
 */
enum DsmStatus dsm_operator_affine(uintptr_t dimension,
                                   const double *matrix_row_major,
                                   const double *shift,
                                   struct DsmOperator **out);

/**
 * Writes the operator's dimension n.
 *
 * # Safety
 * `op` must be a live handle and `out` a valid pointer.
 */
enum DsmStatus dsm_operator_dimension(const struct DsmOperator *op, uintptr_t *out);

/**
 * Evaluates B(u) into `out`. Both buffers must have length `len`, and `len`
 * must equal the operator dimension.
 *
 * # Safety
 * `op` must be a live handle; `input` and `out` must point to `len` doubles.
 */
enum DsmStatus dsm_operator_apply(const struct DsmOperator *op,
                                  const double *input,
                                  uintptr_t len,
                                  double *out);

/**
 * Writes the minimal-norm solution of B(y) = 0 into `out` when one is
 * certified (catalog metadata first, otherwise the solvability oracle) and
 * sets `*found` accordingly. `found = false` with status `Ok` means no
 * solution exists or no certificate is available; `out` is left untouched.
 *
 * # Safety
 * `op` must be a live handle, `out` must point to `len` doubles, `found`
 * must be a valid pointer.
 */
enum DsmStatus dsm_minimal_norm(const struct DsmOperator *op,
                                double *out,
                                uintptr_t len,
                                bool *found);

/**
 * Releases an operator handle. Null is a no-op.
 *
 * # Safety
 * `op` must be null or a handle not freed before.
 */
void dsm_operator_free(struct DsmOperator *op);

/**
 * Builds the constant schedule eps(t) = eps, eps > 0.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DsmStatus dsm_schedule_constant(double eps, struct DsmSchedule **out);

/**
 * Builds the decaying schedule eps(t) = c1 / (c0 + t)^b with c0, c1 > 0 and
 * 0 < b < 1.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DsmStatus dsm_schedule_power_law(double c0, double c1, double b, struct DsmSchedule **out);

/**
 * Writes eps(t) for t >= 0.
 *
 * # Safety
 * `schedule` must be a live handle and `out` a valid pointer.
 */
enum DsmStatus dsm_schedule_eps(const struct DsmSchedule *schedule, double t, double *out);

/**
 * Releases a schedule handle. Null is a no-op.
 *
 * # Safety
 * `schedule` must be null or a handle not freed before.
 */
void dsm_schedule_free(struct DsmSchedule *schedule);

/**
 * Integrates du/dt = -(B(u) + eps(t) u) from `initial` at t = 0 and returns
 * a report handle. Stopping rules are checked in the order converged
 * (residual <= residual_tol), diverged (||u|| > divergence_bound), horizon
 * (t >= t_max). `method` is "euler", "rk4", or "rk4-adaptive"; null selects
 * "rk4". `dt` is the fixed step (initial step for the adaptive method).
 *
 * # Safety
 * `op` and `schedule` must be live handles, `initial` must point to `len`
 * doubles, `out` must be a valid pointer.
 */
enum DsmStatus dsm_solve(const struct DsmOperator *op,
                         const struct DsmSchedule *schedule,
                         const double *initial,
                         uintptr_t len,
                         const char *method,
                         double dt,
                         double residual_tol,
                         double divergence_bound,
                         double t_max,
                         struct DsmSolveReport **out);

/**
 * Termination kind: 0 converged, 1 horizon reached, 2 diverged, -1 on null.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
int dsm_report_status(const struct DsmSolveReport *report);

/**
 * Writes the dimension of the report's limit estimate.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum DsmStatus dsm_report_dimension(const struct DsmSolveReport *report, uintptr_t *out);

/**
 * Copies the limit estimate (the final state) into `out`; `len` must equal
 * the report dimension.
 *
 * # Safety
 * `report` must be a live handle; `out` must point to `len` doubles.
 */
enum DsmStatus dsm_report_limit(const struct DsmSolveReport *report, double *out, uintptr_t len);

/**
 * Writes ||B(u) + eps u|| at the final state.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum DsmStatus dsm_report_final_residual(const struct DsmSolveReport *report, double *out);

/**
 * Writes the number of accepted integration steps.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum DsmStatus dsm_report_steps(const struct DsmSolveReport *report, uint64_t *out);

/**
 * Releases a report handle. Null is a no-op.
 *
 * # Safety
 * `report` must be null or a handle not freed before.
 */
void dsm_report_free(struct DsmSolveReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DSM_H */
