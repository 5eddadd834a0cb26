//! Mask and box primitives: RLE bitmasks, IoU, NMS and box expansion.

mod geometry;
pub mod morph;
mod nms;
mod rle;

pub use geometry::{box_iou, expand_box, pad_mask_region, AttentionMap, BBox, ScoredBox};
pub use nms::{nms, DEFAULT_NMS_IOU, DEFAULT_SCORE_THRESH};
pub use rle::{mask_iou, BitMask, PixelRect, RleBuilder};

/// Default box growth used ahead of mask refinement.
pub const DEFAULT_EXPAND_FACTOR: f64 = 0.20;
/// Attention value assigned to the padded ring.
pub const DEFAULT_ATTENTION_FILL: f32 = 0.5;
