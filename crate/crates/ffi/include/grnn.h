/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef GRNN_H
#define GRNN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GrnnBpttMode {
  GRNN_BPTT_MODE_FULL = 0,
  GRNN_BPTT_MODE_TRUNCATED = 1,
} GrnnBpttMode;

/**
 * Result codes; the first four match the command-line exit codes.
 */
typedef enum GrnnStatus {
  GRNN_STATUS_OK = 0,
  GRNN_STATUS_CONFIG_ERROR = 1,
  GRNN_STATUS_DATA_ERROR = 2,
  GRNN_STATUS_NUMERICAL_ERROR = 3,
  GRNN_STATUS_NULL_POINTER = 4,
  GRNN_STATUS_PANIC = 5,
} GrnnStatus;

/**
 * Opaque synthetic-task trainer.
 */
typedef struct GrnnSynthTrainer GrnnSynthTrainer;

/**
 * Settings of a synthetic-task trainer.
 */
typedef struct GrnnSynthParams {
  size_t memory;
  size_t hidden;
  size_t nodes;
  size_t edges;
  enum GrnnBpttMode mode;
  double learning_rate;
  double weight_decay;
  uint64_t seed;
} GrnnSynthParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty after a success).
 * The pointer stays valid until the next call on the same thread.
 */
const char *grnn_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *grnn_version(void);

/**
 * Parameters with the library defaults (M = 1, 32 units, 100 nodes,
 * 1000 edges, full BPTT, learning rate 1e-3, weight decay 1e-4, seed 0).
 */
struct GrnnSynthParams grnn_synth_params_default(void);

/**
 * Creates a trainer; `*out` receives the handle on success.
 *
 * # Safety
 * `params` must point to a valid `GrnnSynthParams` and `out` to writable storage.
 */
enum GrnnStatus grnn_synth_trainer_new(const struct GrnnSynthParams *params,
                                       struct GrnnSynthTrainer **out);

/**
 * Generates one epoch, trains on it and reports its mean loss and the
 * zero-predictor MSE. Either output pointer may be null.
 *
 * # Safety
 * `trainer` must come from `grnn_synth_trainer_new`; outputs must be writable or null.
 */
enum GrnnStatus grnn_synth_trainer_epoch(struct GrnnSynthTrainer *trainer,
                                         double *mse,
                                         double *baseline);

/**
 * Number of epochs trained so far, or 0 for a null handle.
 *
 * # Safety
 * `trainer` must be null or come from `grnn_synth_trainer_new`.
 */
size_t grnn_synth_trainer_epochs(const struct GrnnSynthTrainer *trainer);

/**
 * Memory parameter the trainer was created with, or 0 for a null handle.
 *
 * # Safety
 * `trainer` must be null or come from `grnn_synth_trainer_new`.
 */
size_t grnn_synth_trainer_memory(const struct GrnnSynthTrainer *trainer);

/**
 * Releases a trainer. Null is ignored.
 *
 * # Safety
 * `trainer` must be null or a handle not yet freed.
 */
void grnn_synth_trainer_free(struct GrnnSynthTrainer *trainer);

/**
 * Targets of the graph adding task for an explicit edge list, from zero
 * buffers. `out` receives `len` values.
 *
 * # Safety
 * `src`, `dst`, `x` must hold `len` readable elements and `out` `len` writable ones.
 */
enum GrnnStatus grnn_oracle_targets(size_t nodes,
                                    size_t memory,
                                    const size_t *src,
                                    const size_t *dst,
                                    const double *x,
                                    size_t len,
                                    double *out);

/**
 * Mean reciprocal rank and recall@k of `len` ranks (each at least 1).
 *
 * # Safety
 * `ranks` must hold `len` readable elements; `mrr` and `recall` must be writable.
 */
enum GrnnStatus grnn_rank_metrics(const size_t *ranks,
                                  size_t len,
                                  size_t k,
                                  double *mrr,
                                  double *recall);

/**
 * Expected MRR of a uniformly random ranking over `universe` candidates.
 */
double grnn_random_ranker_mrr(size_t universe);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRNN_H */
