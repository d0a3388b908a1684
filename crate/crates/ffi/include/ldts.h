#ifndef LDTS_H
#define LDTS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
enum LdtsStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  LDTS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  LDTS_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range or not valid UTF-8.
   */
  LDTS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Hyperparameters were rejected.
   */
  LDTS_STATUS_CONFIG = 3,
  /**
   * Array dimensions did not agree.
   */
  LDTS_STATUS_SHAPE = 4,
  /**
   * A non-finite value appeared in the input or the computation.
   */
  LDTS_STATUS_NUMERIC = 5,
  /**
   * The dataset is inconsistent or has an empty split.
   */
  LDTS_STATUS_DATA = 6,
  /**
   * A file could not be read or written.
   */
  LDTS_STATUS_IO = 7,
  /**
   * A file was readable but malformed.
   */
  LDTS_STATUS_FORMAT = 8,
  /**
   * Training produced a non-finite loss.
   */
  LDTS_STATUS_DIVERGED = 9,
  /**
   * An internal panic was caught.
   */
  LDTS_STATUS_PANIC = 10,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum LdtsStatus LdtsStatus;
#else
typedef int32_t LdtsStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Values accepted wherever a pacing kind is expected.
 */
enum LdtsPacingKind
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  LDTS_PACING_KIND_LINEAR = 0,
  LDTS_PACING_KIND_ROOT = 1,
  LDTS_PACING_KIND_GEOMETRIC = 2,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum LdtsPacingKind LdtsPacingKind;
#else
typedef uint32_t LdtsPacingKind;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Values accepted wherever a training strategy is expected.
 */
enum LdtsStrategy
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  LDTS_STRATEGY_PLAIN = 0,
  LDTS_STRATEGY_ABSOLUTE_LOSS = 1,
  LDTS_STRATEGY_LOSS_DECREASE = 2,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum LdtsStrategy LdtsStrategy;
#else
typedef uint32_t LdtsStrategy;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Values accepted wherever a data split is expected.
 */
enum LdtsSplit
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  LDTS_SPLIT_TRAIN = 0,
  LDTS_SPLIT_VAL = 1,
  LDTS_SPLIT_TEST = 2,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum LdtsSplit LdtsSplit;
#else
typedef uint32_t LdtsSplit;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque dataset handle.
 */
typedef struct LdtsDataset LdtsDataset;

/**
 * Opaque model handle.
 */
typedef struct LdtsModel LdtsModel;

/**
 * Synthetic graph parameters. Fill with `ldts_synth_config_default` first.
 */
typedef struct {
  size_t n_target;
  size_t class_count;
  size_t feature_dim;
  double cluster_separation;
  double noise_fraction;
  size_t aux_types;
  /**
   * 0 picks a size from `n_target` and `class_count`.
   */
  size_t aux_nodes_per_type;
  size_t edges_per_node;
  double homophily;
  double train_fraction;
  double val_fraction;
  uint64_t seed;
} LdtsSynthConfig;

/**
 * Training hyperparameters. Fill with `ldts_train_config_default` first.
 */
typedef struct {
  /**
   * One of `LdtsStrategy`.
   */
  uint32_t strategy;
  /**
   * One of `LdtsPacingKind`.
   */
  uint32_t pacing_kind;
  double lambda0;
  size_t saturation_epoch;
  double lr;
  size_t max_epochs;
  size_t patience;
  size_t hidden_dim;
  uint64_t seed;
} LdtsTrainConfig;

/**
 * What a finished run reports back.
 */
typedef struct {
  size_t best_epoch;
  size_t epochs_run;
  double best_val_accuracy;
  double test_accuracy_at_best;
} LdtsTrainSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null if none failed yet.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *ldts_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ldts_version(void);

/**
 * Fraction of the training set admitted at `epoch`.
 *
 * # Safety
 * `out` must be null or point to writable storage for one `double`.
 */
LdtsStatus ldts_pacing_fraction(uint32_t kind,
                                double lambda0,
                                size_t saturation_epoch,
                                size_t epoch,
                                double *out);

/**
 * Number of nodes drawn from `n` at the given pacing fraction.
 *
 * # Safety
 * `out` must be null or point to writable storage for one `size_t`.
 */
LdtsStatus ldts_sample_count(size_t n, double fraction, size_t *out);

/**
 * Per-node loss decrease `previous[i] - current[i]`.
 *
 * # Safety
 * `previous` and `current` must be readable for `n` doubles and `out`
 * writable for `n` doubles. `out` may alias neither input.
 */
LdtsStatus ldts_loss_decrease(const double *previous, const double *current, size_t n, double *out);

/**
 * Softmax of `values` into `out`.
 *
 * # Safety
 * `values` must be readable and `out` writable for `n` doubles.
 */
LdtsStatus ldts_softmax(const double *values, size_t n, double *out);

/**
 * Draw `k` distinct indices from `probabilities` and write them in ascending order.
 *
 * The draw is a deterministic function of `(probabilities, k, seed, stream)`.
 *
 * # Safety
 * `probabilities` must be readable for `n` doubles and `out_indices`
 * writable for `k` elements.
 */
LdtsStatus ldts_sample_without_replacement(const double *probabilities,
                                           size_t n,
                                           size_t k,
                                           uint64_t seed,
                                           uint64_t stream,
                                           size_t *out_indices);

/**
 * Fill `out` with the default generator parameters.
 *
 * # Safety
 * `out` must be null or point to a writable `LdtsSynthConfig`.
 */
LdtsStatus ldts_synth_config_default(LdtsSynthConfig *out);

/**
 * Generate a synthetic dataset. Release it with `ldts_dataset_free`.
 *
 * # Safety
 * `config` must be null or point to a valid `LdtsSynthConfig`; `out` must be
 * null or writable.
 */
LdtsStatus ldts_dataset_generate(const LdtsSynthConfig *config, LdtsDataset **out);

/**
 * Load a dataset directory. Release it with `ldts_dataset_free`.
 *
 * # Safety
 * `dir` must be null or a NUL-terminated string; `out` must be null or writable.
 */
LdtsStatus ldts_dataset_load(const char *dir, LdtsDataset **out);

/**
 * Write a dataset directory, creating it if needed.
 *
 * # Safety
 * `dataset` must be null or a live handle; `dir` must be null or a
 * NUL-terminated string.
 */
LdtsStatus ldts_dataset_save(const LdtsDataset *dataset, const char *dir);

/**
 * Node count, raw feature width and class count of a dataset. Any output may be null.
 *
 * # Safety
 * `dataset` must be null or a live handle; non-null outputs must be writable.
 */
LdtsStatus ldts_dataset_shape(const LdtsDataset *dataset,
                              size_t *node_count,
                              size_t *feature_dim,
                              size_t *class_count);

/**
 * Release a dataset. Null is ignored.
 *
 * # Safety
 * `dataset` must be null or a handle not yet freed.
 */
void ldts_dataset_free(LdtsDataset *dataset);

/**
 * Fill `out` with the default hyperparameters for a strategy.
 *
 * # Safety
 * `out` must be null or point to a writable `LdtsTrainConfig`.
 */
LdtsStatus ldts_train_config_default(uint32_t strategy_id, uint64_t seed, LdtsTrainConfig *out);

/**
 * Train a model and return the best-validation parameters.
 *
 * `summary` may be null. Release the model with `ldts_model_free`.
 *
 * # Safety
 * `dataset` must be a live handle, `config` a valid `LdtsTrainConfig`,
 * `out_model` writable, and `summary` null or writable.
 */
LdtsStatus ldts_train(const LdtsDataset *dataset,
                      const LdtsTrainConfig *config,
                      LdtsModel **out_model,
                      LdtsTrainSummary *summary);

/**
 * Accuracy of a model on one split of a dataset.
 *
 * # Safety
 * `model` and `dataset` must be live handles; `out` must be null or writable.
 */
LdtsStatus ldts_model_evaluate(const LdtsModel *model,
                               const LdtsDataset *dataset,
                               uint32_t split_id,
                               double *out);

/**
 * Write a model checkpoint.
 *
 * # Safety
 * `model` must be a live handle; `path` a NUL-terminated string.
 */
LdtsStatus ldts_model_save(const LdtsModel *model, const char *path);

/**
 * Read a model checkpoint. Release it with `ldts_model_free`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be null or writable.
 */
LdtsStatus ldts_model_load(const char *path, LdtsModel **out);

/**
 * Release a model. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void ldts_model_free(LdtsModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LDTS_H */
