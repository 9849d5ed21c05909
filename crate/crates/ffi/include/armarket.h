#ifndef ARMARKET_H
#define ARMARKET_H

/* Generated by cbindgen from armarket-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every FFI call.
typedef enum ArmStatus {
  ARM_STATUS_OK = 0,
  // A required pointer argument was null.
  ARM_STATUS_NULL_POINTER = 1,
  // An argument failed validation (bad UTF-8, malformed config).
  ARM_STATUS_INVALID_ARGUMENT = 2,
  // An argument outside the mathematical domain of the operation.
  ARM_STATUS_DOMAIN = 3,
  // An invalid or inconsistent configuration.
  ARM_STATUS_CONFIG = 4,
  // Any other failure (I/O, resolution, internal panic).
  ARM_STATUS_RUNTIME = 5,
} ArmStatus;

// Opaque handle to a finalized set of samples.
typedef struct ArmSamples ArmSamples;

// Opaque handle to a truncated exponential-noise steady-state series.
typedef struct ArmSeries ArmSeries;

// Tail-fit result: density exponent `gamma_hat` with its standard error,
// the number of top order statistics used and the fit threshold.
typedef struct ArmTailFit {
  double gamma_hat;
  double std_err;
  size_t k;
  double w_min;
} ArmTailFit;

// Moments with a batch-means standard error of the mean.
typedef struct ArmMoments {
  double mean;
  double std;
  double se_mean;
} ArmMoments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or null if none.
// The pointer stays valid until the next failing call on the thread.
const char *arm_last_error_message(void);

// Release a string returned through an out pointer.
//
// # Safety
// `s` must have been produced by this library and not freed before.
void arm_string_free(char *s);

// Build the exponential-noise steady-state series at savings `lambda`,
// truncated at `order`.
//
// # Safety
// `out` must be a valid pointer.
enum ArmStatus arm_series_new(double lambda, size_t order, struct ArmSeries **out);

// # Safety
// `series` must come from [`arm_series_new`] and not be freed twice.
void arm_series_free(struct ArmSeries *series);

// Density (clamped at zero) at `x`.
//
// # Safety
// `series` and `out` must be valid pointers.
enum ArmStatus arm_series_pdf(const struct ArmSeries *series, double x, double *out);

// Raw truncated series value at `x` (may undershoot zero near the origin).
//
// # Safety
// `series` and `out` must be valid pointers.
enum ArmStatus arm_series_raw_pdf(const struct ArmSeries *series, double x, double *out);

// CDF normalized by the truncated mass.
//
// # Safety
// `series` and `out` must be valid pointers.
enum ArmStatus arm_series_cdf(const struct ArmSeries *series, double x, double *out);

// Raw first moment `sum C_m lambda^2m`.
//
// # Safety
// `series` and `out` must be valid pointers.
enum ArmStatus arm_series_mean(const struct ArmSeries *series, double *out);

// Truncated mass `sum C_m lambda^m`.
//
// # Safety
// `series` and `out` must be valid pointers.
enum ArmStatus arm_series_mass(const struct ArmSeries *series, double *out);

// Stationary Gaussian parameters `alpha = alpha0/(1-lambda)`,
// `sigma = sigma0/sqrt(1-lambda^2)`.
//
// # Safety
// `alpha_out` and `sigma_out` must be valid pointers.
enum ArmStatus arm_gaussian_fixed_point(double alpha0,
                                        double sigma0,
                                        double lambda,
                                        double *alpha_out,
                                        double *sigma_out);

// Gamma-family density `x^(n-1) e^-x / Gamma(n)`.
//
// # Safety
// `out` must be a valid pointer.
enum ArmStatus arm_gamma_pdf(double n, double x, double *out);

// Copy `len` values into a new sample set.
//
// # Safety
// `values` must point to `len` readable doubles; `out` must be valid.
enum ArmStatus arm_samples_new(const double *values, size_t len, struct ArmSamples **out);

// # Safety
// `samples` must come from [`arm_samples_new`] and not be freed twice.
void arm_samples_free(struct ArmSamples *samples);

// # Safety
// `samples` must be a valid handle.
size_t arm_samples_count(const struct ArmSamples *samples);

// KS distance against an exponential CDF with the given mean.
//
// # Safety
// `samples` and `out` must be valid pointers.
enum ArmStatus arm_samples_ks_exponential(const struct ArmSamples *samples,
                                          double mean,
                                          double *out);

// KS distance against a Gamma-family CDF with shape `n` scaled to the
// given mean.
//
// # Safety
// `samples` and `out` must be valid pointers.
enum ArmStatus arm_samples_ks_gamma(const struct ArmSamples *samples,
                                    double n,
                                    double mean,
                                    double *out);

// Two-sample KS distance.
//
// # Safety
// All pointers must be valid.
enum ArmStatus arm_samples_ks_two(const struct ArmSamples *a,
                                  const struct ArmSamples *b,
                                  double *out);

// Hill tail fit; `k = 0` selects the default top decile.
//
// # Safety
// `samples` and `out` must be valid pointers.
enum ArmStatus arm_samples_tail_exponent(const struct ArmSamples *samples,
                                         size_t k,
                                         struct ArmTailFit *out);

// Mean, std and batch-means standard error.
//
// # Safety
// `samples` and `out` must be valid pointers.
enum ArmStatus arm_samples_moments(const struct ArmSamples *samples, struct ArmMoments *out);

// Run one experiment from a JSON configuration (the same schema the
// `armarket` CLI consumes). On success `summary_json_out` receives the
// summary JSON; release it with [`arm_string_free`]. Artifacts are
// written to the directory named in the configuration.
//
// # Safety
// `config_json` must be a valid NUL-terminated string;
// `summary_json_out` must be a valid pointer.
enum ArmStatus arm_run_experiment(const char *config_json, char **summary_json_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARMARKET_H */
