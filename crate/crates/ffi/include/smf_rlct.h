/* C interface to the smf-rlct learning-coefficient toolkit. */

#ifndef SMF_RLCT_H
#define SMF_RLCT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every API call.
 */
enum SmfStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  /**
   * Success; out-parameters are filled.
   */
  SMF_STATUS_OK = 0,
  /**
   * A pointer was null or a parameter failed validation.
   */
  SMF_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The computation ran but could not produce a result (for example,
   * the Monte Carlo budget resolved too few thresholds).
   */
  SMF_STATUS_ESTIMATION_FAILED = 2,
  /**
   * A panic was caught at the boundary; out-parameters are untouched.
   */
  SMF_STATUS_PANICKED = 3,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum SmfStatus SmfStatus;
#else
typedef int32_t SmfStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque ground-truth handle (a column-stochastic factorization drawn
 * away from the simplex boundary).
 */
typedef struct SmfTruth SmfTruth;

/**
 * Everything known in closed form about one model shape.
 */
typedef struct SmfBoundInfo {
  /**
   * Essential parameter dimension d = H(M+N) - H - N.
   */
  int64_t param_dim;
  /**
   * Upper bound on the learning coefficient, as a reduced fraction.
   */
  int64_t lambda_bar_num;
  int64_t lambda_bar_den;
  /**
   * Nonzero when the exact value is known for this shape.
   */
  bool has_exact;
  /**
   * Exact λ (valid only when `has_exact` is set).
   */
  int64_t lambda_exact_num;
  int64_t lambda_exact_den;
  /**
   * 0 = unknown, 1 = H=H0=1, 2 = H=H0=2, 3 = H=2 over H0=1.
   */
  int32_t exact_case;
  /**
   * Slack of the bound against the regular reference: d/2 - λ̄ ≥ 0.
   */
  int64_t gap_num;
  int64_t gap_den;
} SmfBoundInfo;

/**
 * Volume-scaling estimate of the learning coefficient.
 */
typedef struct SmfEstimate {
  double lambda_hat;
  /**
   * Estimated pole multiplicity (1 when the log term is disabled).
   */
  double multiplicity_hat;
  double stderr_lambda;
  double r_squared;
  /**
   * Leading thresholds that kept enough Monte Carlo hits for the fit.
   */
  uint64_t used_thresholds;
  uint64_t num_samples;
} SmfEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code (never null, do not free).
 */
const char *smf_rlct_status_message(int32_t status);

/**
 * Essential parameter dimension for shape (M, N, H, H0).
 *
 * # Safety
 * `out` must point to writable memory for one `int64_t`.
 */
SmfStatus smf_rlct_param_dim(uint32_t m, uint32_t n, uint32_t h, uint32_t h0, int64_t *out);

/**
 * Closed-form bound table entry for shape (M, N, H, H0).
 *
 * # Safety
 * `out` must point to writable memory for one `SmfBoundInfo`.
 */
SmfStatus smf_rlct_bound(uint32_t m, uint32_t n, uint32_t h, uint32_t h0, struct SmfBoundInfo *out);

/**
 * Leading-order bound λ̄/n on the expected generalization error at
 * sample size `sample_size`.
 *
 * # Safety
 * `out` must point to writable memory for one `double`.
 */
SmfStatus smf_rlct_gen_error_bound(uint32_t m,
                                   uint32_t n,
                                   uint32_t h,
                                   uint32_t h0,
                                   uint64_t sample_size,
                                   double *out);

/**
 * Leading-order upper bound n·s_n + λ̄·log(n) on the Bayesian free
 * energy, where `empirical_entropy` is the per-observation entropy of
 * the sample.
 *
 * # Safety
 * `out` must point to writable memory for one `double`.
 */
SmfStatus smf_rlct_free_energy_upper(uint32_t m,
                                     uint32_t n,
                                     uint32_t h,
                                     uint32_t h0,
                                     uint64_t sample_size,
                                     double empirical_entropy,
                                     double *out);

/**
 * Draws a random rank-`h0` ground truth of shape M×N with interior
 * margin `delta`, reproducible from `seed`. On success `*out` owns the
 * handle; release it with [`smf_rlct_truth_free`].
 *
 * # Safety
 * `out` must point to writable memory for one pointer.
 */
SmfStatus smf_rlct_truth_new_random(uint32_t m,
                                    uint32_t n,
                                    uint32_t h0,
                                    double delta,
                                    uint64_t seed,
                                    struct SmfTruth **out);

/**
 * Releases a truth handle. Null is a no-op.
 *
 * # Safety
 * `truth` must be null or a pointer returned by
 * [`smf_rlct_truth_new_random`] that has not been freed yet.
 */
void smf_rlct_truth_free(struct SmfTruth *truth);

/**
 * Shape of the truth behind a handle.
 *
 * # Safety
 * `truth` must be a live handle; out-pointers must each point to
 * writable memory for one `uint32_t`.
 */
SmfStatus smf_rlct_truth_shape(const struct SmfTruth *truth,
                               uint32_t *out_m,
                               uint32_t *out_n,
                               uint32_t *out_h0);

/**
 * Estimates the learning coefficient of fitting a rank-`h` learner to
 * the given truth, by Monte Carlo scaling of the sublevel volume
 * Pr[error < t] on a geometric threshold grid `[t_hi … t_lo]` of
 * `t_points` points. Deterministic in (`truth`, arguments): the sampler
 * derives one ChaCha stream per work chunk from `seed`.
 *
 * # Safety
 * `truth` must be a live handle and `out` must point to writable memory
 * for one `SmfEstimate`.
 */
SmfStatus smf_rlct_estimate_volume(const struct SmfTruth *truth,
                                   uint32_t h,
                                   uint64_t num_samples,
                                   double t_hi,
                                   double t_lo,
                                   size_t t_points,
                                   bool include_log_term,
                                   uint64_t seed,
                                   struct SmfEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMF_RLCT_H */
