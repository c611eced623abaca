#ifndef SPAC_H
#define SPAC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Closed-form engine.
 */
#define SPAC_ENGINE_ANALYTIC 0

/**
 * Truncated Fock-space oracle.
 */
#define SPAC_ENGINE_FOCK 1

typedef enum SpacStatus {
  SPAC_STATUS_OK = 0,
  SPAC_STATUS_NULL_POINTER = 1,
  SPAC_STATUS_INVALID_PARAMETER = 2,
  SPAC_STATUS_ORTHOGONAL_SELECTION = 3,
  SPAC_STATUS_TRUNCATION_INSUFFICIENT = 4,
  SPAC_STATUS_DEGENERATE_REFERENCE = 5,
  SPAC_STATUS_STEP_TOO_COARSE = 6,
  SPAC_STATUS_NON_FINITE = 7,
  SPAC_STATUS_PANIC = 8,
} SpacStatus;

/**
 * Opaque parameter point.
 */
typedef struct SpacPoint SpacPoint;

typedef struct SpacComplex {
  double re;
  double im;
} SpacComplex;

/**
 * Pointer shifts from one engine. `n_max` and `tail_mass` are zero for the
 * analytic engine.
 */
typedef struct SpacShifts {
  double dx;
  double dp;
  struct SpacComplex transition_value;
  double beta_inv_sq;
  size_t n_max;
  double tail_mass;
} SpacShifts;

typedef struct SpacSnr {
  double chi;
  double r_p;
  double r_n;
  double p_s;
} SpacSnr;

typedef struct SpacFisher {
  double f;
  double f_fidelity;
  double f_q;
  double crb;
  double step;
  size_t n_max;
} SpacFisher;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a point with `N = 1`. On success `*out` owns a handle to release
 * with `spac_point_free`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum SpacStatus spac_point_new(double phi,
                               double delta,
                               double r,
                               double theta,
                               double sigma,
                               double gamma,
                               struct SpacPoint **out);

/**
 * # Safety
 * `point` must be null or a handle from `spac_point_new` not yet freed.
 */
void spac_point_free(struct SpacPoint *point);

/**
 * # Safety
 * `point` must be null or a live handle.
 */
enum SpacStatus spac_point_set_coupling(struct SpacPoint *point, double gamma);

/**
 * # Safety
 * `point` must be null or a live handle.
 */
enum SpacStatus spac_point_set_trials(struct SpacPoint *point, uint64_t n_trials);

/**
 * Caps the Fock dimension the truncation may grow to (default 2048).
 *
 * # Safety
 * `point` must be null or a live handle.
 */
enum SpacStatus spac_point_set_max_n_max(struct SpacPoint *point, size_t max_n_max);

/**
 * # Safety
 * `point` must be a live handle and `out` valid for writes (either may be null).
 */
enum SpacStatus spac_weak_value(const struct SpacPoint *point, struct SpacComplex *out);

/**
 * # Safety
 * As for `spac_weak_value`.
 */
enum SpacStatus spac_transition_value(const struct SpacPoint *point,
                                      uint32_t engine,
                                      struct SpacComplex *out);

/**
 * # Safety
 * As for `spac_weak_value`.
 */
enum SpacStatus spac_pointer_shifts(const struct SpacPoint *point,
                                    uint32_t engine,
                                    struct SpacShifts *out);

/**
 * # Safety
 * As for `spac_weak_value`.
 */
enum SpacStatus spac_snr(const struct SpacPoint *point, struct SpacSnr *out);

/**
 * `step <= 0` selects the default finite-difference step.
 *
 * # Safety
 * As for `spac_weak_value`.
 */
enum SpacStatus spac_qfi(const struct SpacPoint *point, double step, struct SpacFisher *out);

/**
 * Static description of a status code (never null).
 */
const char *spac_status_message(int32_t status);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length
 * excluding the NUL, or 0 when the last call succeeded.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes of writes.
 */
size_t spac_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPAC_H */
