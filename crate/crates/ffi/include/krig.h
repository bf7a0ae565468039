#ifndef KRIG_H
#define KRIG_H

/* Generated by cbindgen from krig-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirroring the CLI exit-code categories.
 */
typedef enum KrigStatus {
  KRIG_STATUS_OK = 0,
  /**
   * Invalid configuration (unknown options, bad bounds, ...).
   */
  KRIG_STATUS_CONFIG = 2,
  /**
   * Invalid data (shape mismatches, unreadable files, bad artifacts).
   */
  KRIG_STATUS_DATA = 3,
  /**
   * Numerical failure during fitting or prediction.
   */
  KRIG_STATUS_NUMERICAL = 4,
  /**
   * A required pointer argument was null.
   */
  KRIG_STATUS_NULL_ARGUMENT = 5,
  /**
   * A string argument was not valid UTF-8.
   */
  KRIG_STATUS_INVALID_UTF8 = 6,
  /**
   * An internal panic was caught at the boundary.
   */
  KRIG_STATUS_PANIC = 7,
} KrigStatus;

/**
 * Opaque fitted-model handle.
 */
typedef struct KrigModel KrigModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *krig_last_error_message(void);

/**
 * Engine version as a static string.
 */
const char *krig_version(void);

/**
 * Fit a model from a TOML configuration (trend/correlation/estimation/
 * optimization options; any `ExpDesign` section is ignored) and an
 * in-memory design: `x` is `n x m` row-major, `y` holds `n` responses.
 *
 * # Safety
 * `config_toml` must be a valid NUL-terminated string; `x` must point to
 * `n * m` doubles and `y` to `n` doubles; `out_model` must be a valid
 * destination pointer. On success it receives a handle that must be
 * released with [`krig_model_free`].
 */
enum KrigStatus krig_fit(const char *config_toml,
                         const double *x,
                         size_t n,
                         size_t m,
                         const double *y,
                         struct KrigModel **out_model);

/**
 * Load a model artifact written by `krig_model_save` (or the CLI).
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out_model` a valid
 * destination pointer.
 */
enum KrigStatus krig_model_load(const char *path, struct KrigModel **out_model);

/**
 * Serialize a model to the versioned JSON artifact format.
 *
 * # Safety
 * `model` must be a live handle from this library; `path` a valid string.
 */
enum KrigStatus krig_model_save(const struct KrigModel *model, const char *path);

/**
 * Input dimensionality M of the fitted model (0 for a null handle).
 *
 * # Safety
 * `model` must be a live handle or null.
 */
size_t krig_model_input_dim(const struct KrigModel *model);

/**
 * Number of fitted outputs (response columns; 0 for a null handle).
 *
 * # Safety
 * `model` must be a live handle or null.
 */
size_t krig_model_output_count(const struct KrigModel *model);

/**
 * Number of training points (0 for a null handle).
 *
 * # Safety
 * `model` must be a live handle or null.
 */
size_t krig_model_train_size(const struct KrigModel *model);

/**
 * Predict at `nq` query points (`xq` is `nq x m` row-major). `out_mean`
 * must hold `nq * output_count` doubles and is filled output-major: all
 * means of output 1, then output 2, ... `out_variance` may be null; when
 * given it receives predictor variances in the same layout.
 *
 * # Safety
 * `model` must be a live handle; buffers must match the documented sizes.
 */
enum KrigStatus krig_predict(const struct KrigModel *model,
                             const double *xq,
                             size_t nq,
                             double *out_mean,
                             double *out_variance);

/**
 * Fixed-format report text; free with [`krig_string_free`]. Returns null
 * for a null handle.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
char *krig_model_report(const struct KrigModel *model);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by [`krig_model_report`] and not yet freed.
 */
void krig_string_free(char *s);

/**
 * Release a model handle.
 *
 * # Safety
 * `model` must have been returned by this library and not yet freed.
 */
void krig_model_free(struct KrigModel *model);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* KRIG_H */
