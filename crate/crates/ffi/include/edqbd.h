#ifndef EDQBD_H
#define EDQBD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum EdqbdStatus {
  EDQBD_STATUS_OK = 0,
  EDQBD_STATUS_NULL_POINTER = 1,
  EDQBD_STATUS_INVALID_ARGUMENT = 2,
  EDQBD_STATUS_UNSTABLE = 3,
  EDQBD_STATUS_OUT_OF_RANGE = 4,
  EDQBD_STATUS_NUMERICAL = 5,
  EDQBD_STATUS_PANIC = 6,
} EdqbdStatus;

/**
 * Model parameters.
 */
typedef struct EdqbdParams EdqbdParams;

/**
 * Stationary distribution with its metrics and objective.
 */
typedef struct EdqbdSolution EdqbdSolution;

/**
 * Objective for every threshold `0..k`.
 */
typedef struct EdqbdThetaCurve EdqbdThetaCurve;

/**
 * Steady-state measures. Undefined delays are NaN.
 */
typedef struct EdqbdMetrics {
  double e_nn;
  double e_nu;
  double e_nn_s;
  double e_nu_s;
  double lambda_n_eff;
  double e_wn;
  double e_wu;
  double p_balk;
  double p_band;
  double p_cap_loss;
} EdqbdMetrics;

/**
 * Revenue and cost rates per hour and the net benefit `z`.
 */
typedef struct EdqbdObjective {
  double r_u;
  double r_n_ed;
  double r_alt_rev;
  double b_cost;
  double w_n_cost;
  double w_u_cost;
  double z;
} EdqbdObjective;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *edqbd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *edqbd_version(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void edqbd_string_free(char *s);

/**
 * Loads a named preset (`rural`, `urban`, `nested-vs-fixed`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum EdqbdStatus edqbd_params_preset(const char *name, struct EdqbdParams **out);

/**
 * Parses a complete parameter record from JSON and validates it.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum EdqbdStatus edqbd_params_from_json(const char *json, struct EdqbdParams **out);

/**
 * Serializes parameters as JSON. Free the result with `edqbd_string_free`.
 *
 * # Safety
 * `params` must be a live handle; `out` must be writable.
 */
enum EdqbdStatus edqbd_params_to_json(const struct EdqbdParams *params, char **out);

/**
 * Sets one field from a JSON value, e.g. `("theta", "7")`. The handle is
 * unchanged if the result fails validation.
 *
 * # Safety
 * `params` must be a live handle; `field` and `value` NUL-terminated strings.
 */
enum EdqbdStatus edqbd_params_set(struct EdqbdParams *params, const char *field, const char *value);

/**
 * # Safety
 * `params` must be NULL or a live handle not used afterwards.
 */
void edqbd_params_free(struct EdqbdParams *params);

/**
 * Solves the chain and evaluates the policy at the handle's threshold.
 *
 * # Safety
 * `params` must be a live handle; `out` must be writable.
 */
enum EdqbdStatus edqbd_solve(const struct EdqbdParams *params, struct EdqbdSolution **out);

/**
 * Stationary probability of `level` urgent and `phase` non-urgent patients.
 *
 * # Safety
 * `solution` must be a live handle; `out` must be writable.
 */
enum EdqbdStatus edqbd_solution_pi(const struct EdqbdSolution *solution,
                                   size_t level,
                                   size_t phase,
                                   double *out);

/**
 * # Safety
 * `solution` must be a live handle; `out` must be writable.
 */
enum EdqbdStatus edqbd_solution_metrics(const struct EdqbdSolution *solution,
                                        struct EdqbdMetrics *out);

/**
 * # Safety
 * `solution` must be a live handle; `out` must be writable.
 */
enum EdqbdStatus edqbd_solution_objective(const struct EdqbdSolution *solution,
                                          struct EdqbdObjective *out);

/**
 * # Safety
 * `solution` must be NULL or a live handle not used afterwards.
 */
void edqbd_solution_free(struct EdqbdSolution *solution);

/**
 * Evaluates every threshold; ties go to the smallest.
 *
 * # Safety
 * `params` must be a live handle; `out` must be writable.
 */
enum EdqbdStatus edqbd_optimize_theta(const struct EdqbdParams *params,
                                      struct EdqbdThetaCurve **out);

/**
 * Number of thresholds on the curve (`k`).
 *
 * # Safety
 * `curve` must be NULL or a live handle.
 */
size_t edqbd_curve_len(const struct EdqbdThetaCurve *curve);

/**
 * # Safety
 * `curve` must be a live handle; outputs must be writable.
 */
enum EdqbdStatus edqbd_curve_best(const struct EdqbdThetaCurve *curve,
                                  uint32_t *theta_star,
                                  double *z_star);

/**
 * Threshold and objective of row `index`.
 *
 * # Safety
 * `curve` must be a live handle; outputs must be writable.
 */
enum EdqbdStatus edqbd_curve_row(const struct EdqbdThetaCurve *curve,
                                 size_t index,
                                 uint32_t *theta,
                                 double *z);

/**
 * # Safety
 * `curve` must be NULL or a live handle not used afterwards.
 */
void edqbd_curve_free(struct EdqbdThetaCurve *curve);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDQBD_H */
