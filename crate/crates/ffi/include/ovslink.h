#ifndef OVSLINK_H
#define OVSLINK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OvsPath {
  OVS_PATH_IOU = 0,
  OVS_PATH_REID = 1,
  OVS_PATH_FLOW = 2,
} OvsPath;

typedef enum OvsStatus {
  OVS_STATUS_OK = 0,
  OVS_STATUS_NULL_POINTER = 1,
  OVS_STATUS_INVALID_ARGUMENT = 2,
  OVS_STATUS_DIMENSION_MISMATCH = 3,
  OVS_STATUS_INVALID_MASK = 4,
  OVS_STATUS_NOT_INITIALIZED = 5,
  OVS_STATUS_INSTANCE_MISMATCH = 6,
  OVS_STATUS_FLOW = 7,
  OVS_STATUS_IO = 8,
  OVS_STATUS_BUFFER_TOO_SMALL = 9,
  OVS_STATUS_OUT_OF_RANGE = 10,
  OVS_STATUS_PANIC = 11,
} OvsStatus;

typedef struct OvsEngine OvsEngine;

typedef struct OvsFlow OvsFlow;

/**
 * Candidates (and optional flow) for one frame.
 */
typedef struct OvsFrame OvsFrame;

typedef struct OvsMask OvsMask;

typedef struct OvsResult OvsResult;

/**
 * Cascade thresholds; start from `ovs_config_default`.
 */
typedef struct OvsConfig {
  double rho_reid;
  double rho_iou;
  double quorum;
  double score_thresh;
  double nms_iou;
  uint32_t gallery_capacity;
  bool reid_path_enabled;
  bool append_on_reid;
} OvsConfig;

/**
 * One tracked instance in a frame result.
 */
typedef struct OvsInstance {
  uint32_t id;
  enum OvsPath path;
  /**
   * Index of the adopted candidate, -1 on the flow path.
   */
  int64_t matched_candidate;
  /**
   * IoU or Re-ID distance of the match; NaN on the flow path.
   */
  double match_value;
  uint64_t area;
} OvsInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *ovs_last_error(void);

/**
 * Length of the embedding vectors the engine expects.
 */
size_t ovs_embedding_dim(void);

/**
 * Builds a mask from column-major run lengths (background run first).
 */
enum OvsStatus ovs_mask_from_rle(uint32_t width,
                                 uint32_t height,
                                 const uint32_t *counts,
                                 size_t len,
                                 struct OvsMask **out);

/**
 * Builds a mask from `width * height` row-major bytes; nonzero is foreground.
 */
enum OvsStatus ovs_mask_from_dense(uint32_t width,
                                   uint32_t height,
                                   const uint8_t *pixels,
                                   struct OvsMask **out);

void ovs_mask_free(struct OvsMask *mask);

enum OvsStatus ovs_mask_dims(const struct OvsMask *mask, uint32_t *width, uint32_t *height);

enum OvsStatus ovs_mask_area(const struct OvsMask *mask, uint64_t *area);

/**
 * Copies the run lengths into `buf`. `len` receives the number of runs; if
 * `cap` is smaller, nothing is copied and `BufferTooSmall` is returned, so
 * a call with `cap == 0` queries the size.
 */
enum OvsStatus ovs_mask_rle(const struct OvsMask *mask, uint32_t *buf, size_t cap, size_t *len);

/**
 * Writes `width * height` row-major bytes (0 or 1) into `buf`.
 */
enum OvsStatus ovs_mask_to_dense(const struct OvsMask *mask, uint8_t *buf, size_t cap);

enum OvsStatus ovs_mask_iou(const struct OvsMask *a, const struct OvsMask *b, double *iou);

/**
 * Backward flow from row-major `dx`/`dy` planes of `width * height` floats.
 */
enum OvsStatus ovs_flow_new(uint32_t width,
                            uint32_t height,
                            const float *dx,
                            const float *dy,
                            struct OvsFlow **out);

void ovs_flow_free(struct OvsFlow *flow);

/**
 * Warps a previous-frame mask into the current frame.
 */
enum OvsStatus ovs_flow_warp(const struct OvsFlow *flow,
                             const struct OvsMask *mask,
                             struct OvsMask **out);

enum OvsStatus ovs_frame_new(struct OvsFrame **out);

void ovs_frame_free(struct OvsFrame *frame);

/**
 * Removes all candidates and the flow so the frame can be reused.
 */
enum OvsStatus ovs_frame_clear(struct OvsFrame *frame);

/**
 * Appends a candidate. `bbox` is `[x_min, y_min, x_max, y_max]`; the mask
 * and embedding are copied.
 */
enum OvsStatus ovs_frame_add_candidate(struct OvsFrame *frame,
                                       const double *bbox,
                                       double score,
                                       const struct OvsMask *mask,
                                       const float *embedding,
                                       size_t embedding_len);

/**
 * Attaches (a copy of) backward flow to the previous frame; null resets to
 * identity.
 */
enum OvsStatus ovs_frame_set_flow(struct OvsFrame *frame, const struct OvsFlow *flow);

enum OvsStatus ovs_frame_len(const struct OvsFrame *frame, size_t *len);

enum OvsStatus ovs_config_default(struct OvsConfig *out);

/**
 * Creates an engine; `config` may be null for defaults.
 */
enum OvsStatus ovs_engine_new(const struct OvsConfig *config, struct OvsEngine **out);

void ovs_engine_free(struct OvsEngine *engine);

/**
 * Registers an instance's first-frame mask before `ovs_engine_init`.
 */
enum OvsStatus ovs_engine_add_instance(struct OvsEngine *engine,
                                       uint32_t id,
                                       const struct OvsMask *mask);

/**
 * Associates the first frame using the registered instances.
 */
enum OvsStatus ovs_engine_init(struct OvsEngine *engine,
                               uint64_t frame_id,
                               const struct OvsFrame *frame,
                               struct OvsResult **out);

/**
 * Associates the next frame. Frame ids must increase.
 */
enum OvsStatus ovs_engine_step(struct OvsEngine *engine,
                               uint64_t frame_id,
                               const struct OvsFrame *frame,
                               struct OvsResult **out);

void ovs_result_free(struct OvsResult *result);

enum OvsStatus ovs_result_len(const struct OvsResult *result, size_t *len);

/**
 * Instances are ordered by ascending id.
 */
enum OvsStatus ovs_result_instance(const struct OvsResult *result,
                                   size_t index,
                                   struct OvsInstance *out);

/**
 * Copies an instance's mask into a new mask handle.
 */
enum OvsStatus ovs_result_mask(const struct OvsResult *result, size_t index, struct OvsMask **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OVSLINK_H */
