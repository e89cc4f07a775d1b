#ifndef WIENERLAB_H
#define WIENERLAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Direction of a relative entropy.
 */
typedef enum WlEntropyDirection {
  /**
   * `H(P*|P) = E(φ log φ)`.
   */
  WL_ENTROPY_DIRECTION_P_STAR_P = 0,
  /**
   * `H(P|P*) = E(-log φ)`.
   */
  WL_ENTROPY_DIRECTION_PP_STAR = 1,
} WlEntropyDirection;

typedef enum WlLemmaCase {
  WL_LEMMA_CASE_BOUNDED = 0,
  WL_LEMMA_CASE_SUP_MOMENT = 1,
  WL_LEMMA_CASE_INTEGRATED_MOMENT = 2,
} WlLemmaCase;

/**
 * Result codes.
 */
typedef enum WlStatus {
  WL_STATUS_OK = 0,
  WL_STATUS_INVALID_ARGUMENT = 1,
  /**
   * A numerical divergence was detected (entropy, norm, factorization, bracketing).
   */
  WL_STATUS_NUMERICAL = 2,
  WL_STATUS_GRID_MISMATCH = 3,
  WL_STATUS_IO = 4,
  WL_STATUS_NULL_POINTER = 5,
  WL_STATUS_BUFFER_TOO_SMALL = 6,
  WL_STATUS_PANIC = 7,
} WlStatus;

typedef enum WlUtilityKind {
  WL_UTILITY_KIND_EXPONENTIAL = 0,
  WL_UTILITY_KIND_POWER = 1,
  WL_UTILITY_KIND_LOG = 2,
} WlUtilityKind;

/**
 * Pricing-kernel samples.
 */
typedef struct WlKernel WlKernel;

/**
 * Sampled paths on a common grid.
 */
typedef struct WlPathSet WlPathSet;

/**
 * Summary of an optimal terminal profile.
 */
typedef struct WlProfileSummary {
  double expected_utility;
  double standard_error;
  double closed_form;
  double budget_residual;
  double c_star;
} WlProfileSummary;

/**
 * Hölder orders and admissibility of a replication setup.
 */
typedef struct WlHolderBudget {
  double theta_order;
  double h3;
  double rho0;
  bool admissible;
} WlHolderBudget;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *wl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wl_version(void);

/**
 * Samples `n_paths` paths of the model described by `model_json`
 * (e.g. `{"kind":"fbm","hurst":0.7,"horizon":1.0}`) on `n_steps` uniform steps.
 *
 * # Safety
 * `model_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WlStatus wl_simulate(const char *model_json,
                          size_t n_steps,
                          size_t n_paths,
                          uint64_t seed,
                          struct WlPathSet **out);

/**
 * # Safety
 * `set` must come from [`wl_simulate`] and not be used afterwards.
 */
void wl_pathset_free(struct WlPathSet *set);

/**
 * # Safety
 * `set` must be a live handle or null.
 */
size_t wl_pathset_n_paths(const struct WlPathSet *set);

/**
 * Grid points per path (steps + 1).
 *
 * # Safety
 * `set` must be a live handle or null.
 */
size_t wl_pathset_n_points(const struct WlPathSet *set);

/**
 * Copies the grid times into `buf`.
 *
 * # Safety
 * `set` must be a live handle; `buf` must hold `capacity` doubles.
 */
enum WlStatus wl_pathset_times(const struct WlPathSet *set, double *buf, size_t capacity);

/**
 * Copies the values of path `index` into `buf`.
 *
 * # Safety
 * `set` must be a live handle; `buf` must hold `capacity` doubles.
 */
enum WlStatus wl_pathset_values(const struct WlPathSet *set,
                                size_t index,
                                double *buf,
                                size_t capacity);

/**
 * Samples the pricing kernel for `theta_json`
 * (e.g. `{"kind":"constant","theta0":0.3,"horizon":1.0}`) over Wiener paths.
 *
 * # Safety
 * `theta_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WlStatus wl_kernel_sample(const char *theta_json,
                               size_t n_steps,
                               size_t n_paths,
                               uint64_t seed,
                               struct WlKernel **out);

/**
 * # Safety
 * `kernel` must come from [`wl_kernel_sample`] and not be used afterwards.
 */
void wl_kernel_free(struct WlKernel *kernel);

/**
 * # Safety
 * `kernel` must be a live handle or null.
 */
size_t wl_kernel_len(const struct WlKernel *kernel);

/**
 * Copies `log φ(T)` per path into `buf`.
 *
 * # Safety
 * `kernel` must be a live handle; `buf` must hold `capacity` doubles.
 */
enum WlStatus wl_kernel_log_phi(const struct WlKernel *kernel, double *buf, size_t capacity);

/**
 * Monte Carlo relative entropy; `diverging` reports unstable batch means.
 *
 * # Safety
 * `kernel` must be a live handle and the output pointers valid.
 */
enum WlStatus wl_kernel_entropy(const struct WlKernel *kernel,
                                enum WlEntropyDirection direction,
                                double *value,
                                double *standard_error,
                                bool *diverging);

/**
 * Optimal terminal profile for the utility; `param` is β (exponential),
 * γ (power) and ignored for log.
 *
 * # Safety
 * `kernel` must be a live handle and `out` valid.
 */
enum WlStatus wl_optimal_profile(const struct WlKernel *kernel,
                                 enum WlUtilityKind kind,
                                 double param,
                                 double w,
                                 struct WlProfileSummary *out);

/**
 * `∫ f dg` over `[0, horizon]` for values on a uniform grid of `n_points` nodes.
 *
 * # Safety
 * `f` and `g` must hold `n_points` doubles; `out` must be valid.
 */
enum WlStatus wl_gls_integral(const double *f,
                              const double *g,
                              size_t n_points,
                              double horizon,
                              double alpha,
                              double *out);

/**
 * `‖f‖_{α,[0,horizon]}` for values on a uniform grid.
 *
 * # Safety
 * `f` must hold `n_points` doubles; `out` must be valid.
 */
enum WlStatus wl_holder_norm(const double *f,
                             size_t n_points,
                             double horizon,
                             double alpha,
                             double *out);

/**
 * `Λ_α(g)` for values on a uniform grid.
 *
 * # Safety
 * `g` must hold `n_points` doubles; `out` must be valid.
 */
enum WlStatus wl_lambda_alpha(const double *g,
                              size_t n_points,
                              double horizon,
                              double alpha,
                              double *out);

/**
 * Lower bound on the variance of the prelimit drift density.
 *
 * # Safety
 * `out` must be valid.
 */
enum WlStatus wl_variance_blowup_bound(double hurst, double t, double eps, double *out);

/**
 * Hölder bookkeeping; `delta` is ignored for the bounded case.
 *
 * # Safety
 * `out` must be valid.
 */
enum WlStatus wl_holder_budget(double lambda,
                               enum WlLemmaCase case_,
                               double delta,
                               double h1,
                               double h2,
                               struct WlHolderBudget *out);

/**
 * Self-replication of one fBm path with the default `levels`-level schedule.
 * Writes `levels + 1` residuals `|V_{t_n} - Z_{t_{n-1}}|` into `residuals`.
 *
 * # Safety
 * `residuals` must hold `capacity` doubles; `never_hit` must be valid.
 */
enum WlStatus wl_replicate_self(double hurst,
                                size_t n_steps,
                                size_t levels,
                                uint64_t seed,
                                double *residuals,
                                size_t capacity,
                                bool *never_hit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WIENERLAB_H */
