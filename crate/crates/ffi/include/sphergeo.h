#ifndef SPHERGEO_H
#define SPHERGEO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SG_MESSAGE_LEN 256

/**
 * Result code of every call.
 */
typedef enum SgStatus {
  SG_STATUS_OK = 0,
  SG_STATUS_NULL_POINTER = 1,
  SG_STATUS_INVALID_BOX = 2,
  SG_STATUS_INVALID_ARGUMENT = 3,
  SG_STATUS_BUFFER_TOO_SMALL = 4,
  SG_STATUS_PANIC = 5,
} SgStatus;

/**
 * IoU measure selector.
 */
typedef enum SgMethod {
  SG_METHOD_FOV = 0,
  SG_METHOD_SPH = 1,
  SG_METHOD_EXACT = 2,
  /**
   * Monte-Carlo, one million samples, seed 0.
   */
  SG_METHOD_MONTE_CARLO = 3,
} SgMethod;

/**
 * Validated box list. Create with `sg_boxes_new`, release with `sg_boxes_free`.
 */
typedef struct SgBoxSet SgBoxSet;

/**
 * Error details. `index` is the offending box row, or -1.
 */
typedef struct SgError {
  enum SgStatus code;
  int64_t index;
  char message[SG_MESSAGE_LEN];
} SgError;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *sg_version(void);

/**
 * Validates `n` boxes and stores them in a new handle written to `out`.
 *
 * # Safety
 * `data` must be valid for `n * 4` reads, `out` for one write, `err` null or writable.
 */
enum SgStatus sg_boxes_new(const double *data,
                           size_t n,
                           struct SgBoxSet **out,
                           struct SgError *err);

/**
 * Number of boxes in the set; 0 for null.
 *
 * # Safety
 * `set` must be null or a live handle.
 */
size_t sg_boxes_len(const struct SgBoxSet *set);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `set` must be null or a handle from `sg_boxes_new` not yet freed.
 */
void sg_boxes_free(struct SgBoxSet *set);

/**
 * IoU of two single boxes (4 doubles each).
 *
 * # Safety
 * `a` and `b` must be valid for 4 reads, `out` for one write, `err` null or writable.
 */
enum SgStatus sg_iou(const double *a,
                     const double *b,
                     enum SgMethod m,
                     double *out,
                     struct SgError *err);

/**
 * Row-major `n_a x n_b` IoU matrix into `out` (capacity `out_len`).
 *
 * # Safety
 * Box buffers must be valid for `n * 4` reads, `out` for `out_len` writes.
 */
enum SgStatus sg_iou_matrix(const double *a,
                            size_t n_a,
                            const double *b,
                            size_t n_b,
                            enum SgMethod m,
                            double *out,
                            size_t out_len,
                            struct SgError *err);

/**
 * FoV-IoU matrix; `sg_iou_matrix` with `SG_METHOD_FOV` and an `n_a * n_b` buffer.
 *
 * # Safety
 * As for `sg_iou_matrix`.
 */
enum SgStatus sg_batch_fov_iou(const double *a,
                               size_t n_a,
                               const double *b,
                               size_t n_b,
                               double *out,
                               struct SgError *err);

/**
 * Same as `sg_iou_matrix` on validated handles.
 *
 * # Safety
 * `a` and `b` must be live handles, `out` valid for `out_len` writes.
 */
enum SgStatus sg_boxes_iou_matrix(const struct SgBoxSet *a,
                                  const struct SgBoxSet *b,
                                  enum SgMethod m,
                                  double *out,
                                  size_t out_len,
                                  struct SgError *err);

/**
 * FoV-GIoU loss of `n` (ground truth, detection) row pairs. Writes `n`
 * losses and, when `grad` is not null, `n * 4` gradients with respect to the
 * detection's `(lon, lat, fov_h, fov_v)`, per degree.
 *
 * # Safety
 * `gt` and `det` must be valid for `n * 4` reads, `loss` for `n` writes and
 * `grad` null or valid for `n * 4` writes.
 */
enum SgStatus sg_batch_fov_giou_loss(const double *gt,
                                     const double *det,
                                     size_t n,
                                     double *loss,
                                     double *grad,
                                     struct SgError *err);

/**
 * Greedy single-category NMS. Writes kept row indices in score order to
 * `keep` (capacity `n`) and their count to `n_keep`.
 *
 * # Safety
 * `boxes` must be valid for `n * 4` reads, `scores` and `keep` for `n`
 * reads/writes, `n_keep` for one write.
 */
enum SgStatus sg_batch_nms(const double *boxes,
                           const double *scores,
                           size_t n,
                           double iou_threshold,
                           enum SgMethod m,
                           size_t *keep,
                           size_t *n_keep,
                           struct SgError *err);

/**
 * A zeroed error record, for callers that want a starting value.
 */
struct SgError sg_error_empty(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPHERGEO_H */
