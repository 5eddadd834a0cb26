use crate::error::Result;
use crate::maskcore::morph::{grow_rect, Grid};
use crate::maskcore::{BBox, BitMask};

/// Frame information handed to a refiner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineContext {
    pub frame_id: u64,
    pub instance_id: u32,
    pub width: u32,
    pub height: u32,
}

/// Post-processing applied to flow-warped masks before they are emitted.
pub trait MaskRefiner: Send {
    fn refine(&self, mask: &BitMask, bbox: &BBox, ctx: &RefineContext) -> Result<BitMask>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityRefiner;

impl MaskRefiner for IdentityRefiner {
    fn refine(&self, mask: &BitMask, _bbox: &BBox, _ctx: &RefineContext) -> Result<BitMask> {
        Ok(mask.clone())
    }
}

/// Morphological closing with a square of the given radius. Fills holes
/// and cracks left by warping; never removes foreground.
#[derive(Clone, Copy, Debug)]
pub struct MorphCloseRefiner {
    pub radius: u32,
}

impl Default for MorphCloseRefiner {
    fn default() -> Self {
        MorphCloseRefiner { radius: 1 }
    }
}

impl MaskRefiner for MorphCloseRefiner {
    fn refine(&self, mask: &BitMask, _bbox: &BBox, _ctx: &RefineContext) -> Result<BitMask> {
        let Some(bb) = mask.bbox() else {
            return Ok(mask.clone());
        };
        let rect = grow_rect(bb, self.radius, mask.width(), mask.height());
        let r = self.radius as usize;
        Grid::from_mask(mask, rect).dilate(r).erode(r).to_mask()
    }
}

/// Refiner that drops everything; useful for exercising liveness.
#[derive(Clone, Copy, Debug, Default)]
pub struct EmptyRefiner;

impl MaskRefiner for EmptyRefiner {
    fn refine(&self, mask: &BitMask, _bbox: &BBox, _ctx: &RefineContext) -> Result<BitMask> {
        BitMask::empty(mask.width(), mask.height())
    }
}
