/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef GKE_H
#define GKE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of the C interface.
 */
typedef enum GkeStatus {
  GKE_STATUS_OK = 0,
  GKE_STATUS_NULL_POINTER = 1,
  GKE_STATUS_INVALID_ARGUMENT = 2,
  GKE_STATUS_NOT_HERMITIAN = 3,
  GKE_STATUS_NOT_POSITIVE_DEFINITE = 4,
  GKE_STATUS_DIMENSION_MISMATCH = 5,
  GKE_STATUS_NOT_CONVERGED = 6,
  GKE_STATUS_NUMERICAL = 7,
  GKE_STATUS_PARSE = 8,
  GKE_STATUS_PANIC = 9,
} GkeStatus;

/**
 * Opaque weighted ensemble of positive definite matrices.
 */
typedef struct GkeEnsemble GkeEnsemble;

/**
 * Opaque result of a solve.
 */
typedef struct GkeSolution GkeSolution;

/**
 * Outcome of one inequality check.
 */
typedef struct GkeCheckOutcome {
  /**
   * 1 when every link of the check holds, 0 otherwise.
   */
  int holds;
  /**
   * Smallest scale-relative margin over the links.
   */
  double margin;
  /**
   * Largest tolerance applied to a link.
   */
  double tolerance;
} GkeCheckOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds an ensemble from `count` matrices of size `dim`.
 *
 * `data` holds `count * dim * dim` complex entries as interleaved doubles.
 * `weights` may be null for uniform weights, otherwise it holds `count`
 * values summing to one.
 *
 * # Safety
 * `data` must point to `2 * count * dim * dim` readable doubles, `weights`
 * to `count` doubles when non-null, and `out` must be writable.
 */
enum GkeStatus gke_ensemble_new(size_t dim,
                                size_t count,
                                const double *data,
                                const double *weights,
                                struct GkeEnsemble **out);

/**
 * Draws a seeded random ensemble with spectra in `[lower, upper]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GkeStatus gke_ensemble_generate(size_t dim,
                                     size_t count,
                                     double lower,
                                     double upper,
                                     uint64_t seed,
                                     struct GkeEnsemble **out);

/**
 * Parses an ensemble from the JSON ensemble file format.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` must be writable.
 */
enum GkeStatus gke_ensemble_from_json(const char *json, struct GkeEnsemble **out);

/**
 * Serializes an ensemble; free the string with [`gke_string_free`].
 *
 * # Safety
 * `ensemble` must be a live handle and `out` must be writable.
 */
enum GkeStatus gke_ensemble_to_json(const struct GkeEnsemble *ensemble, char **out);

/**
 * Matrix size of the ensemble, or 0 for a null handle.
 *
 * # Safety
 * `ensemble` must be null or a live handle.
 */
size_t gke_ensemble_dim(const struct GkeEnsemble *ensemble);

/**
 * Number of matrices in the ensemble, or 0 for a null handle.
 *
 * # Safety
 * `ensemble` must be null or a live handle.
 */
size_t gke_ensemble_len(const struct GkeEnsemble *ensemble);

/**
 * # Safety
 * `ensemble` must be null or a handle not yet freed.
 */
void gke_ensemble_free(struct GkeEnsemble *ensemble);

/**
 * Solves the generalized Karcher equation for the generator named by `generator`
 * (`log`, `affine`, `harmonic`, `power:T`, `deform:P:TAG`).
 *
 * `tol <= 0` selects the default tolerance and `max_iter == 0` the default
 * iteration budget. A solve that runs out of iterations still produces a
 * solution; check it with [`gke_solution_converged`].
 *
 * # Safety
 * `ensemble` must be a live handle, `generator` a NUL-terminated string and
 * `out` writable.
 */
enum GkeStatus gke_solve(const struct GkeEnsemble *ensemble,
                         const char *generator,
                         double tol,
                         size_t max_iter,
                         struct GkeSolution **out);

/**
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t gke_solution_dim(const struct GkeSolution *solution);

/**
 * Copies the solution matrix into `buf` as `dim * dim` interleaved complex
 * entries in row-major order. `len` is the capacity of `buf` in doubles.
 *
 * # Safety
 * `solution` must be a live handle and `buf` must hold `len` writable doubles.
 */
enum GkeStatus gke_solution_copy_matrix(const struct GkeSolution *solution,
                                        double *buf,
                                        size_t len);

/**
 * # Safety
 * `solution` must be null or a live handle.
 */
size_t gke_solution_iterations(const struct GkeSolution *solution);

/**
 * Final residual norm, or NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
double gke_solution_residual(const struct GkeSolution *solution);

/**
 * 1 when the solve reached its tolerance, 0 otherwise.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
int gke_solution_converged(const struct GkeSolution *solution);

/**
 * # Safety
 * `solution` must be null or a handle not yet freed.
 */
void gke_solution_free(struct GkeSolution *solution);

/**
 * Runs one seeded trial of the check named `check_id` on a random ensemble
 * of `count` matrices of size `dim` with spectra in `[lower, upper]`.
 * `generator` may be null to use the default generator cycle.
 * `tol <= 0` selects the default check tolerance.
 *
 * # Safety
 * `check_id` must be a NUL-terminated string, `generator` null or one, and
 * `out` writable.
 */
enum GkeStatus gke_run_check(const char *check_id,
                             const char *generator,
                             size_t dim,
                             size_t count,
                             double lower,
                             double upper,
                             uint64_t seed,
                             size_t trial,
                             double tol,
                             struct GkeCheckOutcome *out);

/**
 * The constant (h+1)²/(4h) for a ratio `h >= 1`, NaN otherwise.
 */
double gke_kantorovich_constant(double h);

/**
 * Message of the last failure on this thread, or null if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *gke_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void gke_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GKE_H */
