#ifndef RIDGE_SKETCH_H
#define RIDGE_SKETCH_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of an FFI call.
 */
typedef enum RsStatus {
  RS_STATUS_OK = 0,
  RS_STATUS_NULL_POINTER = 1,
  RS_STATUS_INVALID_INPUT = 2,
  RS_STATUS_OUT_OF_VALIDITY_RANGE = 3,
  RS_STATUS_SHAPE = 4,
  RS_STATUS_SKETCH_TOO_LARGE = 5,
  RS_STATUS_NUMERICAL_BREAKDOWN = 6,
  RS_STATUS_RANK_DEFICIENT = 7,
  RS_STATUS_INFEASIBLE = 8,
  RS_STATUS_IO = 9,
  RS_STATUS_PARSE = 10,
  RS_STATUS_BUFFER_TOO_SMALL = 11,
  RS_STATUS_PANIC = 12,
} RsStatus;

typedef enum RsSketch {
  RS_SKETCH_GAUSSIAN = 0,
  RS_SKETCH_SRHT = 1,
} RsSketch;

typedef enum RsMode {
  RS_MODE_POLYAK_THEN_GRADIENT = 0,
  RS_MODE_GRADIENT_ONLY = 1,
} RsMode;

/**
 * Opaque regularized least-squares instance.
 */
typedef struct RsProblem RsProblem;

/**
 * Opaque result of a solve.
 */
typedef struct RsReport RsReport;

/**
 * Solver settings; obtain defaults from [`rs_solver_options_default`].
 */
typedef struct RsSolverOptions {
  enum RsSketch sketch;
  enum RsMode mode;
  double rho;
  double eta;
  double eps;
  size_t m_initial;
  size_t max_iters;
  uint64_t seed;
  /**
   * Non-zero accepts Gaussian settings outside the stated range.
   */
  uint8_t permissive;
} RsSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *rs_last_error_message(void);

/**
 * Builds a problem from a row-major `n x d` matrix `a`, a length-`n`
 * vector `b` and the regularization `nu > 0`.
 *
 * # Safety
 * `a` must point to `n * d` doubles, `b` to `n` doubles, and `out` to
 * writable storage for one pointer.
 */
enum RsStatus rs_problem_new(const double *a,
                             size_t n,
                             size_t d,
                             const double *b,
                             double nu,
                             struct RsProblem **out);

/**
 * # Safety
 * `problem` must come from [`rs_problem_new`] and not be freed twice.
 */
void rs_problem_free(struct RsProblem *problem);

/**
 * Number of unknowns `d`, or 0 for a null handle.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
size_t rs_problem_dim(const struct RsProblem *problem);

/**
 * Effective dimension `|D|_F^2 / |D|_2^2` of the problem.
 *
 * # Safety
 * `problem` must be a live handle and `out` writable.
 */
enum RsStatus rs_problem_effective_dimension(const struct RsProblem *problem, double *out);

/**
 * Exact solution written to `x` (capacity `len >= d`).
 *
 * # Safety
 * `problem` must be a live handle and `x` must point to `len` doubles.
 */
enum RsStatus rs_direct_solve(const struct RsProblem *problem, double *x, size_t len);

struct RsSolverOptions rs_solver_options_default(void);

/**
 * Runs the adaptive solver; wide problems go through the dual. `options`
 * may be null for the defaults. A solve that stops without converging
 * still returns `RS_STATUS_OK`; check [`rs_report_converged`].
 *
 * # Safety
 * `problem` must be a live handle, `options` null or valid, `out` writable.
 */
enum RsStatus rs_solve(const struct RsProblem *problem,
                       const struct RsSolverOptions *options,
                       struct RsReport **out);

/**
 * # Safety
 * `report` must come from [`rs_solve`] and not be freed twice.
 */
void rs_report_free(struct RsReport *report);

/**
 * Copies the solution into `x` (capacity `len`).
 *
 * # Safety
 * `report` must be a live handle and `x` must point to `len` doubles.
 */
enum RsStatus rs_report_x(const struct RsReport *report, double *x, size_t len);

/**
 * Length of the solution vector, 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t rs_report_dim(const struct RsReport *report);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
size_t rs_report_iterations(const struct RsReport *report);

/**
 * Number of rejected steps (sketch doublings).
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t rs_report_rejections(const struct RsReport *report);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
size_t rs_report_final_m(const struct RsReport *report);

/**
 * 1 when the stopping rule was met, 0 otherwise or for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
uint8_t rs_report_converged(const struct RsReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIDGE_SKETCH_H */
