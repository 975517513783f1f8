#ifndef COLLIDE_H
#define COLLIDE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum CollideStatus {
  COLLIDE_STATUS_OK = 0,
  COLLIDE_STATUS_INVALID_ARGUMENT = 1,
  COLLIDE_STATUS_INSUFFICIENT_DATA = 2,
  COLLIDE_STATUS_OUT_OF_RANGE = 3,
  COLLIDE_STATUS_NULL_POINTER = 4,
  COLLIDE_STATUS_INTERNAL = 5,
} CollideStatus;

typedef enum CollideRegimeOutcome {
  COLLIDE_REGIME_OUTCOME_FIRED = 0,
  COLLIDE_REGIME_OUTCOME_SATURATED = 1,
  COLLIDE_REGIME_OUTCOME_NO_FIRE = 2,
} CollideRegimeOutcome;

/**
 * Estimation parameters. Create with `collide_config_new`.
 */
typedef struct CollideConfig CollideConfig;

/**
 * Incremental estimator that holds one batch at a time.
 */
typedef struct CollideStream CollideStream;

typedef struct CollideEstimate {
  double p_hat;
  double entropy_bits;
  /**
   * True when `p_hat` is zero and `entropy_bits` is only a lower bound.
   */
  bool entropy_is_lower_bound;
  uint32_t d;
  uint64_t n_used;
  uint64_t n_batches;
  uint64_t batch_size;
  uint64_t n_dropped;
  uint64_t peak_distinct;
} CollideEstimate;

typedef struct CollidePlan {
  uint64_t n_total;
  uint64_t n_batches;
  uint64_t batch_size;
  double assumed_norm_lower;
  double variance_ratio_bound;
} CollidePlan;

typedef struct CollideRegime {
  uint32_t lambda;
  double p_bracket_low;
  double p_bracket_high;
  uint32_t tests_run;
  uint64_t samples_used;
  double per_test_delta;
  enum CollideRegimeOutcome outcome;
} CollideRegime;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *collide_last_error(void);

/**
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle pointer.
 */
enum CollideStatus collide_config_new(uint32_t d,
                                      double epsilon,
                                      double delta,
                                      struct CollideConfig **out);

/**
 * Fixes the batch length instead of deriving it from the sample count.
 *
 * # Safety
 * `cfg` must come from `collide_config_new` and not have been freed.
 */
enum CollideStatus collide_config_set_batch_size(struct CollideConfig *cfg, uint64_t batch_size);

/**
 * # Safety
 * `cfg` must be NULL or a handle from `collide_config_new` not yet freed.
 */
void collide_config_free(struct CollideConfig *cfg);

/**
 * Estimates `sum_x p(x)^d` from `len` symbols.
 *
 * # Safety
 * `cfg` must be a live handle, `symbols` must point to `len` values and
 * `out` must be writable.
 */
enum CollideStatus collide_estimate_moment(const struct CollideConfig *cfg,
                                           const uint64_t *symbols,
                                           size_t len,
                                           struct CollideEstimate *out);

/**
 * Sample plan for a distribution whose order-`d` Renyi entropy is at most
 * `entropy_upper_bits`.
 *
 * # Safety
 * `cfg` must be a live handle and `out` writable.
 */
enum CollideStatus collide_plan_samples(const struct CollideConfig *cfg,
                                        double entropy_upper_bits,
                                        struct CollidePlan *out);

/**
 * Number of monochromatic `d`-subsets in `batch`. Fails with
 * `OUT_OF_RANGE` if the count does not fit in 64 bits.
 *
 * # Safety
 * `batch` must point to `len` values and `out` must be writable.
 */
enum CollideStatus collide_count_collisions_u64(const uint64_t *batch,
                                                size_t len,
                                                uint32_t d,
                                                uint64_t *out);

/**
 * `H_d = log2(p) / (1 - d)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CollideStatus collide_moment_to_entropy(double p, uint32_t d, double *out);

/**
 * Runs the doubling regime search over `len` symbols.
 *
 * # Safety
 * `symbols` must point to `len` values and `out` must be writable.
 */
enum CollideStatus collide_learn_regime(const uint64_t *symbols,
                                        size_t len,
                                        uint32_t d,
                                        double delta_total,
                                        uint32_t lambda_max,
                                        struct CollideRegime *out);

/**
 * 64-bit FNV-1a of `len` bytes, the same symbol hash the CLI applies to
 * text input.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes (or be NULL with `len == 0`).
 */
uint64_t collide_hash_token(const uint8_t *bytes, size_t len);

/**
 * Opens a stream of `n_batches` batches of `batch_size` symbols.
 *
 * # Safety
 * `out` must be writable.
 */
enum CollideStatus collide_stream_new(uint32_t d,
                                      uint64_t batch_size,
                                      uint64_t n_batches,
                                      struct CollideStream **out);

/**
 * Feeds `len` symbols. Symbols beyond the last batch are counted as dropped.
 *
 * # Safety
 * `stream` must be a live handle and `symbols` must point to `len` values.
 */
enum CollideStatus collide_stream_push(struct CollideStream *stream,
                                       const uint64_t *symbols,
                                       size_t len);

/**
 * True once every batch is full.
 *
 * # Safety
 * `stream` must be NULL or a live handle.
 */
bool collide_stream_is_complete(const struct CollideStream *stream);

/**
 * Produces the estimate. The handle can only be finished once and must
 * still be freed afterwards.
 *
 * # Safety
 * `stream` must be a live handle and `out` writable.
 */
enum CollideStatus collide_stream_finish(struct CollideStream *stream, struct CollideEstimate *out);

/**
 * # Safety
 * `stream` must be NULL or a handle from `collide_stream_new` not yet freed.
 */
void collide_stream_free(struct CollideStream *stream);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLLIDE_H */
