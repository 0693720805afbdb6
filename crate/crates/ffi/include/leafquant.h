#ifndef LEAFQUANT_H
#define LEAFQUANT_H

/* Generated by cbindgen from crates/ffi. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum LqStatus {
  LQ_STATUS_OK = 0,
  LQ_STATUS_NULL_POINTER = 1,
  LQ_STATUS_INVALID_ARGUMENT = 2,
  LQ_STATUS_FILE_UNREADABLE = 3,
  LQ_STATUS_UNSUPPORTED_FORMAT = 4,
  LQ_STATUS_CORRUPT_IMAGE = 5,
  LQ_STATUS_DIMENSION_MISMATCH = 6,
  LQ_STATUS_IMAGE_TOO_SMALL = 7,
  LQ_STATUS_INVALID_CONFIG = 8,
  LQ_STATUS_SPEC_INVALID = 9,
  LQ_STATUS_IO = 10,
  LQ_STATUS_PANIC = 99,
} LqStatus;

/**
 * Opaque run configuration (segmentation thresholds and calibration).
 */
typedef struct LqConfig LqConfig;

/**
 * Opaque 8-bit RGB image.
 */
typedef struct LqImage LqImage;

/**
 * Per-image result. The caller keeps track of which image it belongs to.
 */
typedef struct LqImageReport {
  double quality;
  uint64_t green_px;
  uint64_t defect_px;
  uint64_t leaf_px;
  double leaf_area_mm2;
  double defect_area_mm2;
  double percent_defect;
} LqImageReport;

typedef struct LqRegionReport {
  uint64_t n_images;
  double total_leaf_area_mm2;
  double total_defect_area_mm2;
  double percent_defect;
} LqRegionReport;

typedef struct LqGroundTruth {
  uint64_t green_px;
  uint64_t defect_px;
} LqGroundTruth;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread (empty after success).
 *
 * The pointer stays valid until the next `lq_*` call on the same thread.
 */
const char *lq_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lq_version(void);

/**
 * Creates a configuration with every default.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum LqStatus lq_config_new_default(struct LqConfig **out);

/**
 * Parses a JSON configuration with optional `segmentation` and
 * `calibration` sections.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum LqStatus lq_config_from_json(const char *json, struct LqConfig **out);

/**
 * # Safety
 * `config` must be NULL or a handle from this library not yet freed.
 */
void lq_config_free(struct LqConfig *config);

/**
 * mm² per pixel under the configuration's calibration.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum LqStatus lq_config_area_per_pixel(const struct LqConfig *config, double *out);

/**
 * Decodes a PNG or JPEG file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum LqStatus lq_image_load(const char *path, struct LqImage **out);

/**
 * Copies `len` bytes of interleaved row-major RGB into a new image.
 *
 * # Safety
 * `data` must point to at least `len` readable bytes; `out` must be writable.
 */
enum LqStatus lq_image_from_rgb(uint32_t width,
                                uint32_t height,
                                const uint8_t *data,
                                size_t len,
                                struct LqImage **out);

/**
 * # Safety
 * `image` must be NULL or a handle from this library not yet freed.
 */
void lq_image_free(struct LqImage *image);

/**
 * Width in pixels, 0 for NULL.
 *
 * # Safety
 * `image` must be NULL or a live handle.
 */
uint32_t lq_image_width(const struct LqImage *image);

/**
 * Height in pixels, 0 for NULL.
 *
 * # Safety
 * `image` must be NULL or a live handle.
 */
uint32_t lq_image_height(const struct LqImage *image);

/**
 * Runs the full per-image pipeline. A NULL `config` uses the defaults.
 *
 * # Safety
 * `image` must be a live handle, `config` NULL or live, `out` writable.
 */
enum LqStatus lq_quantify(const struct LqImage *image,
                          const struct LqConfig *config,
                          struct LqImageReport *out);

/**
 * Area-weighted aggregation of `n` image reports.
 *
 * # Safety
 * `reports` must point to `n` readable reports (may be NULL when `n == 0`);
 * `out` must be writable.
 */
enum LqStatus lq_aggregate(const struct LqImageReport *reports,
                           size_t n,
                           struct LqRegionReport *out);

/**
 * Renders the default synthetic scene for `seed` and its ground truth.
 *
 * # Safety
 * `out_image` must be writable; `out_truth` may be NULL.
 */
enum LqStatus lq_synth_scene(uint64_t seed,
                             struct LqImage **out_image,
                             struct LqGroundTruth *out_truth);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEAFQUANT_H */
