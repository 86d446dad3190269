#ifndef WII_H
#define WII_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Feature representation codes.
 */
#define WII_REPR_TIME_IQ 0

#define WII_REPR_FREQ_IQ 1

#define WII_REPR_FREQ_AMP_PHASE 2

/**
 * Result of every call.
 */
typedef enum WiiStatus {
  WII_STATUS_OK = 0,
  /**
   * Bad configuration or argument value.
   */
  WII_STATUS_USAGE = 1,
  /**
   * Malformed, missing or inconsistent data.
   */
  WII_STATUS_DATA = 2,
  /**
   * Training diverged.
   */
  WII_STATUS_NUMERIC = 3,
  /**
   * A required pointer was null or a string was not UTF-8.
   */
  WII_STATUS_INVALID_ARGUMENT = 4,
  /**
   * Internal failure; the library caught a panic.
   */
  WII_STATUS_INTERNAL = 5,
} WiiStatus;

/**
 * A generated or loaded dataset.
 */
typedef struct WiiDataset WiiDataset;

/**
 * A trained classifier.
 */
typedef struct WiiModel WiiModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *wii_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wii_version(void);

/**
 * Synthesizes `vectors_per_cell` records for every class and SNR.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum WiiStatus wii_dataset_generate(uint32_t vectors_per_cell,
                                    uint64_t seed,
                                    struct WiiDataset **out_ds);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid handle slot.
 */
enum WiiStatus wii_dataset_read(const char *path_c, struct WiiDataset **out_ds);

/**
 * # Safety
 * `ds` must come from this library; `path` must be NUL-terminated.
 */
enum WiiStatus wii_dataset_write(const struct WiiDataset *ds, const char *path_c);

/**
 * Number of records, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle from this library.
 */
uint64_t wii_dataset_len(const struct WiiDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle from this library, not used afterwards.
 */
void wii_dataset_free(struct WiiDataset *ds);

/**
 * Converts `n` interleaved (I, Q) float pairs into an `n x 2` feature
 * matrix written to `out` (capacity `2 n`).
 *
 * # Safety
 * `iq` must point to `2 n` floats and `out` to `2 n` writable floats.
 */
enum WiiStatus wii_features_from_iq(const float *iq, size_t n, uint32_t repr, float *out_values);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` a valid handle slot.
 */
enum WiiStatus wii_model_read(const char *path_c, struct WiiModel **out_model);

/**
 * # Safety
 * `model` must be a live handle; `path` must be NUL-terminated.
 */
enum WiiStatus wii_model_write(const struct WiiModel *model, const char *path_c);

/**
 * Floats per input sample (rows x 2), or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t wii_model_input_len(const struct WiiModel *model);

/**
 * Output classes, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t wii_model_num_classes(const struct WiiModel *model);

/**
 * Copies the class id of each output unit into `ids` (capacity `cap`).
 *
 * # Safety
 * `ids` must point to `cap` writable bytes.
 */
enum WiiStatus wii_model_class_ids(const struct WiiModel *model, uint8_t *ids, size_t cap);

/**
 * Class posteriors for `n` samples: reads `n * input_len` floats from `x`
 * and writes `n * num_classes` floats to `probs`.
 *
 * # Safety
 * Buffers must have the stated lengths.
 */
enum WiiStatus wii_model_predict(const struct WiiModel *model,
                                 const float *x,
                                 size_t n,
                                 float *probs);

/**
 * # Safety
 * `model` must be null or a handle from this library, not used afterwards.
 */
void wii_model_free(struct WiiModel *model);

/**
 * Runs a named preset on `ds`, writing reports into `out_dir`; the trained
 * model is returned through `out_model` when it is non-null.
 *
 * # Safety
 * Strings must be NUL-terminated; `ds` a live handle.
 */
enum WiiStatus wii_run_preset(const char *name,
                              const struct WiiDataset *ds,
                              const char *out_dir,
                              uint64_t seed,
                              struct WiiModel **out_model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WII_H */
