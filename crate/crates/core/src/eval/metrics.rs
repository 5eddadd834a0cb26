//! Region (J) and contour (F) similarity between a predicted and a
//! ground-truth mask.

use crate::error::Result;
use crate::maskcore::morph::{grow_rect, Grid};
use crate::maskcore::{mask_iou, BitMask, PixelRect};

/// Fraction of the frame diagonal used as the boundary matching radius.
pub const CONTOUR_TOLERANCE_FRACTION: f64 = 0.0075;

/// `ceil(0.0075 * diagonal)` pixels.
pub fn default_tolerance(width: u32, height: u32) -> u32 {
    let diag = (f64::from(width).powi(2) + f64::from(height).powi(2)).sqrt();
    (CONTOUR_TOLERANCE_FRACTION * diag).ceil() as u32
}

/// Region similarity: IoU, with two empty masks scoring 1.
pub fn jaccard(pred: &BitMask, gt: &BitMask) -> Result<f64> {
    mask_iou(pred, gt)
}

fn union_rect(a: PixelRect, b: PixelRect) -> PixelRect {
    PixelRect {
        x0: a.x0.min(b.x0),
        y0: a.y0.min(b.y0),
        x1: a.x1.max(b.x1),
        y1: a.y1.max(b.y1),
    }
}

/// Foreground pixels with a background 4-neighbour or lying on the frame edge.
fn boundary(g: &Grid) -> Grid {
    let (w, h) = (g.width(), g.height());
    let (fw, fh) = g.frame;
    let r = g.rect;
    let mut data = vec![false; w * h];
    for row in 0..h {
        for col in 0..w {
            if !g.get(col, row) {
                continue;
            }
            let (x, y) = (r.x0 as usize + col, r.y0 as usize + row);
            let on_edge = x == 0 || y == 0 || x + 1 == fw as usize || y + 1 == fh as usize;
            let bg_neighbour = (col == 0 || !g.get(col - 1, row))
                || (col + 1 == w || !g.get(col + 1, row))
                || (row == 0 || !g.get(col, row - 1))
                || (row + 1 == h || !g.get(col, row + 1));
            data[row * w + col] = on_edge || bg_neighbour;
        }
    }
    Grid {
        frame: g.frame,
        rect: g.rect,
        data,
    }
}

fn matched_fraction(points: &Grid, reach: &Grid) -> f64 {
    let total = points.data.iter().filter(|&&v| v).count();
    if total == 0 {
        return 0.0;
    }
    let hit = points.data.iter().zip(&reach.data).filter(|(&p, &r)| p && r).count();
    hit as f64 / total as f64
}

/// Boundary F-measure with a Chebyshev matching radius of `tolerance_px`.
pub fn contour_f(pred: &BitMask, gt: &BitMask, tolerance_px: u32) -> Result<f64> {
    pred.check_same_dims(gt)?;
    let (pb, gb) = match (pred.bbox(), gt.bbox()) {
        (None, None) => return Ok(1.0),
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(0.0),
    };
    let (w, h) = pred.dims();
    // one pixel of margin keeps neighbour lookups at the window edge honest
    let rect = grow_rect(union_rect(pb, gb), tolerance_px.saturating_add(1), w, h);
    let pred_b = boundary(&Grid::from_mask(pred, rect));
    let gt_b = boundary(&Grid::from_mask(gt, rect));
    let r = tolerance_px as usize;
    let precision = matched_fraction(&pred_b, &gt_b.dilate(r));
    let recall = matched_fraction(&gt_b, &pred_b.dilate(r));
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}
