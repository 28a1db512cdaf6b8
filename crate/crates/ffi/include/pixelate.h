#ifndef PIXELATE_H
#define PIXELATE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PxStatus {
  PX_STATUS_OK = 0,
  PX_STATUS_NULL_POINTER = 1,
  PX_STATUS_INVALID_ARGUMENT = 2,
  PX_STATUS_IO = 3,
  PX_STATUS_PARSE = 4,
  PX_STATUS_IRREGULAR_LATTICE = 5,
  PX_STATUS_DUPLICATE_COORDINATE = 6,
  PX_STATUS_INVALID_VALUE = 7,
  PX_STATUS_GRID_TOO_SMALL = 8,
  PX_STATUS_LADDER_OVERFLOW = 9,
  PX_STATUS_INCONSISTENT_INPUTS = 10,
  PX_STATUS_UNKNOWN_DATASET = 11,
  PX_STATUS_PANIC = 99,
} PxStatus;

typedef enum PxScale {
  PX_SCALE_IMULT = 0,
  PX_SCALE_IEXPN = 1,
} PxScale;

/**
 * Opaque prediction grid.
 */
typedef struct PxGrid PxGrid;

/**
 * Opaque pixelation result.
 */
typedef struct PxResult PxResult;

/**
 * Pixelation parameters.
 */
typedef struct PxParams {
  uint32_t num_sizes;
  enum PxScale scale;
  uint64_t factor;
  uint32_t min_big_x;
  uint32_t min_big_y;
} PxParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *px_version(void);

/**
 * Message for the most recent failure on this thread, or NULL if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *px_last_error_message(void);

/**
 * Fills `out` with the default parameters (6 sizes, imult, factor 1, 12x12 big pixels).
 *
 * # Safety
 * `out` must be null or point to writable memory for one `PxParams`.
 */
enum PxStatus px_params_default(struct PxParams *out);

/**
 * Builds a grid from two row-major layers of `n_x * n_y` values, lower-left cell first.
 * NaN in either layer marks a cell missing.
 *
 * # Safety
 * `values` and `uncertainties` must each point to `n_x * n_y` readable doubles;
 * `out` must point to writable storage for one pointer.
 */
enum PxStatus px_grid_from_layers(size_t n_x,
                                  size_t n_y,
                                  double origin_x,
                                  double origin_y,
                                  double cell_w,
                                  double cell_h,
                                  const double *values,
                                  const double *uncertainties,
                                  double zero_tol,
                                  struct PxGrid **out);

/**
 * Reads an `x,y,z,u` or `x,y,z,z_lo,z_hi` CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PxStatus px_grid_read_csv(const char *path, double zero_tol, struct PxGrid **out);

/**
 * Reads a prediction and an uncertainty ESRI ASCII grid with identical headers.
 *
 * # Safety
 * `z_path` and `u_path` must be NUL-terminated strings; `out` must be writable.
 */
enum PxStatus px_grid_read_ascii_pair(const char *z_path,
                                      const char *u_path,
                                      double zero_tol,
                                      struct PxGrid **out);

/**
 * Generates a bundled synthetic dataset (`demo_small` or `demo_acceptance`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum PxStatus px_grid_bundled(const char *name, struct PxGrid **out);

/**
 * # Safety
 * `grid` must be a live handle; `n_x` and `n_y` must be writable.
 */
enum PxStatus px_grid_dims(const struct PxGrid *grid, size_t *n_x, size_t *n_y);

/**
 * # Safety
 * `grid` must be null or a handle not yet freed.
 */
void px_grid_free(struct PxGrid *grid);

/**
 * Runs the full pixelation. `params` may be null for the defaults.
 *
 * # Safety
 * `grid` must be a live handle, `params` null or readable, `out` writable.
 */
enum PxStatus px_pixelate(const struct PxGrid *grid,
                          const struct PxParams *params,
                          struct PxResult **out);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void px_result_free(struct PxResult *result);

/**
 * Copies up to `capacity` ladder sides into `out` and returns the ladder length.
 *
 * # Safety
 * `result` must be a live handle; `out` must hold `capacity` u64 values (or be null with capacity 0).
 */
size_t px_result_ladder(const struct PxResult *result,
                        uint64_t *out,
                        size_t capacity);

/**
 * # Safety
 * `result` must be a live handle; `n_big_x` and `n_big_y` must be writable.
 */
enum PxStatus px_result_big_pixels(const struct PxResult *result, size_t *n_big_x, size_t *n_big_y);

/**
 * Whether every big pixel had the same average uncertainty (map fully resolved).
 *
 * # Safety
 * `result` must be a live handle.
 */
bool px_result_is_degenerate(const struct PxResult *result);

/**
 * Number of nested pixels in the result.
 *
 * # Safety
 * `result` must be a live handle.
 */
size_t px_result_num_pixels(const struct PxResult *result);

/**
 * Writes per-cell display values and size classes, row-major from the lower-left.
 * Missing cells get NaN and class 0; zero-with-certainty cells get 0.0 and class 0.
 * Either output may be null.
 *
 * # Safety
 * `result` must be a live handle; non-null outputs must hold `len` elements, and
 * `len` must equal the number of cells.
 */
enum PxStatus px_result_display(const struct PxResult *result,
                                double *values,
                                uint32_t *size_classes,
                                size_t len);

/**
 * Writes the per-cell pixelated CSV.
 *
 * # Safety
 * `result` must be a live handle and `path` a NUL-terminated string.
 */
enum PxStatus px_result_write_pixelated_csv(const struct PxResult *result, const char *path);

/**
 * Writes the summary table as CSV, or as a markdown table when `markdown` is true.
 *
 * # Safety
 * `result` must be a live handle and `path` a NUL-terminated string.
 */
enum PxStatus px_result_write_summary(const struct PxResult *result,
                                      const char *path,
                                      bool markdown);

/**
 * Renders the pixelated map as PNG with the default palette.
 *
 * # Safety
 * `result` must be a live handle and `path` a NUL-terminated string.
 */
enum PxStatus px_result_write_map_png(const struct PxResult *result,
                                      const char *path,
                                      uint32_t px_per_cell);

/**
 * Renders the quantile-interval allocation map as PNG.
 *
 * # Safety
 * `result` must be a live handle and `path` a NUL-terminated string.
 */
enum PxStatus px_result_write_alloc_png(const struct PxResult *result,
                                        const char *path,
                                        uint32_t px_per_cell);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PIXELATE_H */
