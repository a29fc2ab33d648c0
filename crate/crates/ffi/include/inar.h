#ifndef INAR_H
#define INAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes shared by every entry point.
typedef enum InarStatus {
  INAR_STATUS_OK = 0,
  INAR_STATUS_NULL_POINTER = 1,
  // A distribution or parameter was rejected at construction.
  INAR_STATUS_INVALID_ARGUMENT = 2,
  // A computation was undefined for the given inputs.
  INAR_STATUS_DOMAIN = 3,
  // Text input could not be parsed.
  INAR_STATUS_PARSE = 4,
  // The caller's buffer is too short; the required length was written.
  INAR_STATUS_BUFFER_TOO_SMALL = 5,
  // A Rust panic was caught at the boundary.
  INAR_STATUS_PANIC = 6,
} InarStatus;

// Path handle, `X_0 = 0, X_1, ..., X_n`.
typedef struct InarPath InarPath;

// Immigration distribution handle.
typedef struct InarSpec InarSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *inar_last_error_message(void);

// Parses `poisson:<rate>`, `geometric:<p>` or `table:<w0,w1,...>`.
//
// # Safety
// `text` must be a nul-terminated string; `out` must be writable.
enum InarStatus inar_spec_parse(const char *text, struct InarSpec **out);

// # Safety
// `out` must be writable.
enum InarStatus inar_spec_poisson(double rate, struct InarSpec **out);

// # Safety
// `out` must be writable.
enum InarStatus inar_spec_geometric(double p, struct InarSpec **out);

// Weights on `{0, ..., len-1}`, normalized internally.
//
// # Safety
// `weights` must point to `len` doubles; `out` must be writable.
enum InarStatus inar_spec_table(const double *weights, size_t len, struct InarSpec **out);

// # Safety
// `spec` must come from an `inar_spec_*` constructor and not be freed twice.
void inar_spec_free(struct InarSpec *spec);

// # Safety
// `spec` must be a live handle; `out` must be writable.
enum InarStatus inar_spec_pmf(const struct InarSpec *spec, uint64_t k, double *out);

// `g(0)`, mean and variance. Any of the out pointers may be null.
//
// # Safety
// `spec` must be a live handle; non-null out pointers must be writable.
enum InarStatus inar_spec_moments(const struct InarSpec *spec,
                                  double *g0,
                                  double *mean,
                                  double *variance);

// Copies `len` values into a new path; the first value must be 0.
//
// # Safety
// `values` must point to `len` integers; `out` must be writable.
enum InarStatus inar_path_new(const uint64_t *values, size_t len, struct InarPath **out);

// Number of stored values, `n + 1`.
//
// # Safety
// `path` must be a live handle; `out` must be writable.
enum InarStatus inar_path_len(const struct InarPath *path, size_t *out);

// Copies the values into `buf`. With a short buffer nothing is copied,
// `*len_out` receives the required length and `BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `path` must be a live handle; `buf` must hold `cap` integers; `len_out` may be null.
enum InarStatus inar_path_values(const struct InarPath *path,
                                 uint64_t *buf,
                                 size_t cap,
                                 size_t *len_out);

// # Safety
// `path` must come from this library and not be freed twice.
void inar_path_free(struct InarPath *path);

// Simulates `n` steps from `X_0 = 0`; identical seeds give identical paths.
//
// # Safety
// `spec` must be a live handle; `out` must be writable.
enum InarStatus inar_simulate(const struct InarSpec *spec,
                              double theta,
                              uint64_t n,
                              uint64_t seed,
                              struct InarPath **out);

// Simulates at `θ = 1 - h/n²`.
//
// # Safety
// `spec` must be a live handle; `out` must be writable.
enum InarStatus inar_simulate_local(const struct InarSpec *spec,
                                    double h,
                                    uint64_t n,
                                    uint64_t seed,
                                    struct InarPath **out);

// # Safety
// `spec` must be a live handle; `out` must be writable.
enum InarStatus inar_transition_prob(const struct InarSpec *spec,
                                     double theta,
                                     uint64_t from,
                                     uint64_t to,
                                     double *out);

// Exact log-likelihood ratio of `θ = 1 - h/n²` against `θ = 1 - h0/n²`.
//
// # Safety
// `spec` and `path` must be live handles; `out` must be writable.
enum InarStatus inar_loglr_exact(const struct InarSpec *spec,
                                 const struct InarPath *path,
                                 double h,
                                 double h0,
                                 double *out);

// Limit-experiment approximation `-(h - h0) g(0) μ/2 + D_n log(h/h0)`.
//
// # Safety
// `spec` and `path` must be live handles; `out` must be writable.
enum InarStatus inar_loglr_approx(const struct InarSpec *spec,
                                  const struct InarPath *path,
                                  double h,
                                  double h0,
                                  double *out);

// Number of downward steps.
//
// # Safety
// `path` must be a live handle; `out` must be writable.
enum InarStatus inar_down_moves(const struct InarPath *path, uint64_t *out);

// # Safety
// `path` must be a live handle; `out` must be writable.
enum InarStatus inar_efficient_estimate(const struct InarPath *path,
                                        double g0,
                                        double mu,
                                        double *out);

// # Safety
// `path` must be a live handle; `out` must be writable.
enum InarStatus inar_semiparam_estimate(const struct InarPath *path, double *out);

// OLS estimate of `h`; `theta_hat` may be null.
//
// # Safety
// `path` must be a live handle; `h_hat` must be writable.
enum InarStatus inar_ols_estimate(const struct InarPath *path,
                                  double mu,
                                  double *h_hat,
                                  double *theta_hat);

// Dickey–Fuller statistic; reject at level `α` when it is below the normal `α` quantile.
//
// # Safety
// `path` must be a live handle; `out` must be writable.
enum InarStatus inar_df_statistic(const struct InarPath *path,
                                  double mu,
                                  double sigma2,
                                  double *out);

// Rejection probability of the down-move test: 1 after any down move, else `alpha`.
//
// # Safety
// `path` must be a live handle; `out` must be writable.
enum InarStatus inar_efficient_test(const struct InarPath *path, double alpha, double *out);

// Power `1 - (1 - α) exp(-h g(0) μ/2)` of the limit test.
//
// # Safety
// `spec` must be a live handle; `out` must be writable.
enum InarStatus inar_limit_power(const struct InarSpec *spec, double h, double alpha, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INAR_H */
