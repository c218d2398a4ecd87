#ifndef JSYMM_H
#define JSYMM_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Return code of every fallible call.
 */
typedef enum JsymmStatus {
  JSYMM_STATUS_OK = 0,
  JSYMM_STATUS_NULL_POINTER = 1,
  JSYMM_STATUS_INVALID_ARGUMENT = 2,
  JSYMM_STATUS_DIMENSION_MISMATCH = 3,
  JSYMM_STATUS_DOMAIN = 4,
  JSYMM_STATUS_SINGULAR = 5,
  JSYMM_STATUS_DIVERGED = 6,
  JSYMM_STATUS_IO = 7,
  JSYMM_STATUS_PANIC = 8,
} JsymmStatus;

typedef enum JsymmSolver {
  JSYMM_SOLVER_EGM = 0,
  JSYMM_SOLVER_BROYDEN = 1,
  JSYMM_SOLVER_JSYMM = 2,
  JSYMM_SOLVER_JSYMM_LS = 3,
  JSYMM_SOLVER_JSYMM_TR = 4,
} JsymmSolver;

/**
 * How a solve ended.
 */
typedef enum JsymmOutcome {
  JSYMM_OUTCOME_CONVERGED = 0,
  JSYMM_OUTCOME_STATIONARY = 1,
  JSYMM_OUTCOME_MAX_ITERATIONS = 2,
} JsymmOutcome;

/**
 * Opaque minimax problem.
 */
typedef struct JsymmProblem JsymmProblem;

/**
 * Opaque solve result.
 */
typedef struct JsymmResult JsymmResult;

/**
 * Solver settings. Obtain defaults from [`jsymm_solver_options_default`].
 */
typedef struct JsymmSolverOptions {
  double tol_f;
  size_t max_iters;
  /**
   * Fixed stepsize for egm, broyden and jsymm.
   */
  double stepsize;
  double c1;
  double r0;
  double delta0;
  double zeta;
  double beta_hat;
  double tol_g;
  uint64_t seed;
  /**
   * Non-zero enables per-iteration invariant checks.
   */
  int32_t strict_checks;
  /**
   * Non-zero allows jsymm-tr on domain-constrained problems.
   */
  int32_t force_tr;
} JsymmSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *jsymm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *jsymm_version(void);

struct JsymmSolverOptions jsymm_solver_options_default(void);

/**
 * Random convex-concave quadratic with `n` primal and `m` dual variables.
 */
enum JsymmStatus jsymm_problem_quadratic_random(size_t n,
                                                size_t m,
                                                double alpha,
                                                uint64_t seed,
                                                struct JsymmProblem **out);

/**
 * Bilinear problem `L(x, y) = yᵀAx` with `A` given as an `m × n` row-major array.
 */
enum JsymmStatus jsymm_problem_bilinear(const double *a,
                                        size_t m,
                                        size_t n,
                                        struct JsymmProblem **out);

enum JsymmStatus jsymm_problem_bilinear_random(size_t m,
                                               size_t n,
                                               uint64_t seed,
                                               struct JsymmProblem **out);

/**
 * Analytic center of `{x : Ax <= b}` with `A` of size `m × n`, row-major.
 */
enum JsymmStatus jsymm_problem_analytic_center(const double *a,
                                               const double *b,
                                               size_t m,
                                               size_t n,
                                               struct JsymmProblem **out);

enum JsymmStatus jsymm_problem_analytic_center_random(size_t n,
                                                      size_t m,
                                                      uint64_t seed,
                                                      struct JsymmProblem **out);

/**
 * Two-dimensional quartic with interaction coefficient `a`.
 */
enum JsymmStatus jsymm_problem_quartic(double a, struct JsymmProblem **out);

void jsymm_problem_free(struct JsymmProblem *problem);

/**
 * Primal and dual block sizes. The total dimension is `*n + *m`.
 */
enum JsymmStatus jsymm_problem_dims(const struct JsymmProblem *problem, size_t *n, size_t *m);

/**
 * Writes `F(z)` into `out` (length `len`).
 */
enum JsymmStatus jsymm_problem_eval_f(const struct JsymmProblem *problem,
                                      const double *z,
                                      size_t len,
                                      double *out);

/**
 * Writes the `len × len` Jacobian at `z` into `out`, row-major.
 */
enum JsymmStatus jsymm_problem_eval_jacobian(const struct JsymmProblem *problem,
                                             const double *z,
                                             size_t len,
                                             double *out);

/**
 * Writes the problem's natural starting point (the origin unless the
 * problem has an interior preset).
 */
enum JsymmStatus jsymm_problem_default_start(const struct JsymmProblem *problem,
                                             double *out,
                                             size_t len);

/**
 * Runs `solver` from `z0`. `options` may be NULL for defaults. On success
 * `*out` owns a result that must be released with [`jsymm_result_free`].
 */
enum JsymmStatus jsymm_solve(const struct JsymmProblem *problem,
                             enum JsymmSolver solver,
                             const double *z0,
                             size_t len,
                             const struct JsymmSolverOptions *options,
                             struct JsymmResult **out);

void jsymm_result_free(struct JsymmResult *result);

/**
 * Termination reason; `MaxIterations` for a NULL handle.
 */
enum JsymmOutcome jsymm_result_outcome(const struct JsymmResult *result);

/**
 * Iterations performed; 0 for a NULL handle.
 */
size_t jsymm_result_iterations(const struct JsymmResult *result);

/**
 * `‖F‖` at the final iterate; NaN for a NULL handle.
 */
double jsymm_result_final_norm_f(const struct JsymmResult *result);

/**
 * Copies the final iterate into `out` (length `len`, the problem dimension).
 */
enum JsymmStatus jsymm_result_point(const struct JsymmResult *result, double *out, size_t len);

/**
 * Number of trace records (iterations + 1).
 */
size_t jsymm_result_trace_len(const struct JsymmResult *result);

/**
 * Copies `‖F‖` of every trace record into `out` (length `len`, equal to
 * [`jsymm_result_trace_len`]).
 */
enum JsymmStatus jsymm_result_trace_norm_f(const struct JsymmResult *result,
                                           double *out,
                                           size_t len);

/**
 * J-symmetric least-change update of the `(n+m) × (n+m)` row-major `b`
 * with secant pair `(s, y)`, written to `out`.
 */
enum JsymmStatus jsymm_update_jacobian(const double *b,
                                       const double *s,
                                       const double *y,
                                       size_t n,
                                       size_t m,
                                       double *out);

/**
 * Inverse of the J-symmetric update: given `h = b⁻¹`, writes `(b⁺)⁻¹` to
 * `out`. Returns `JSYMM_STATUS_SINGULAR` when the low-rank formula breaks
 * down.
 */
enum JsymmStatus jsymm_update_inverse(const double *h,
                                      const double *b,
                                      const double *s,
                                      const double *y,
                                      size_t n,
                                      size_t m,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JSYMM_H */
