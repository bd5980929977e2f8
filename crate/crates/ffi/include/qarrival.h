#ifndef QARRIVAL_H
#define QARRIVAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QaStatus {
  QA_OK = 0,
  /**
   * A required pointer argument was null.
   */
  QA_ERR_NULL = 1,
  /**
   * An argument was out of range or inconsistent.
   */
  QA_ERR_INVALID = 2,
  /**
   * A value exceeded the floating-point range.
   */
  QA_ERR_OVERFLOW = 3,
  /**
   * A numerical method failed to converge or detected an inconsistency.
   */
  QA_ERR_NUMERICAL = 4,
  /**
   * A caller-provided buffer was too small.
   */
  QA_ERR_BUFFER = 5,
  /**
   * An internal panic was caught.
   */
  QA_ERR_PANIC = 6,
} QaStatus;

/**
 * Arrival-time law of one point counter; opaque to C.
 */
typedef struct QaArrival QaArrival;

/**
 * Spectral and time grids of an arrival computation.
 */
typedef struct QaGrids {
  double y_max;
  size_t n_y;
  double tau_max;
  size_t n_tau;
} QaGrids;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len` bytes) and returns the full message
 * length excluding the terminator. Pass a null `buf` to query the length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t qa_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qa_version(void);

/**
 * Faddeeva function `w(u) = exp(-u^2) erfc(-i u)`.
 *
 * # Safety
 * `out_re` and `out_im` must be valid for writes.
 */
enum QaStatus qa_faddeeva_w(double re, double im, double *out_re, double *out_im);

/**
 * Detection probability `P(inf)` of a point counter of strength `alpha`
 * at the origin for the packet `(xi0, v)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QaStatus qa_efficiency(double xi0, double v, double alpha, double *out);

/**
 * Coupling that maximizes `P(inf)` within `[lo, hi]`.
 *
 * # Safety
 * `alpha_opt` and `p_max` must be valid for writes.
 */
enum QaStatus qa_optimize_alpha(double xi0,
                                double v,
                                double lo,
                                double hi,
                                double *alpha_opt,
                                double *p_max);

/**
 * Default grids: `y_max = 400`, `n_y = 16384`, `tau_max = 4`, `n_tau = 2048`.
 */
struct QaGrids qa_default_grids(void);

/**
 * Computes the arrival law of a counter at `xi_a` with strength `alpha`
 * for the packet `(xi0, v)`, storing a new handle in `*out`.
 *
 * # Safety
 * `out` must be valid for writes. The handle must be released with
 * [`qa_arrival_free`].
 */
enum QaStatus qa_arrival_new(double xi0,
                             double v,
                             double xi_a,
                             double alpha,
                             struct QaGrids grids,
                             struct QaArrival **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `h` must be null or a handle from [`qa_arrival_new`] not yet freed.
 */
void qa_arrival_free(struct QaArrival *h);

/**
 * Number of time points; 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t qa_arrival_len(const struct QaArrival *h);

/**
 * Detection probability `P(inf)`; NaN for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
double qa_arrival_p_inf(const struct QaArrival *h);

/**
 * Copies `tau`, `p` and `P_cum` into caller buffers of length `len`, which
 * must be at least [`qa_arrival_len`]. Any of the three may be null to
 * skip it.
 *
 * # Safety
 * `h` must be a live handle; non-null buffers must hold `len` doubles.
 */
enum QaStatus qa_arrival_copy(const struct QaArrival *h,
                              double *tau,
                              double *p,
                              double *p_cum,
                              size_t len);

/**
 * Draws `n` first-event times with the inverse-CDF sampler. Runs without
 * an event within the time grid are written as NaN. `*detected` (if not
 * null) receives the number of detections. Identical seeds give identical
 * draws.
 *
 * # Safety
 * `h` must be a live handle; `times` must hold `n` doubles.
 */
enum QaStatus qa_sample_first_events(const struct QaArrival *h,
                                     size_t n,
                                     uint64_t seed,
                                     double *times,
                                     size_t *detected);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QARRIVAL_H */
