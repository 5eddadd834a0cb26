use serde::{Deserialize, Serialize};

use super::rle::{BitMask, PixelRect};
use crate::error::{Error, Result};

/// Axis-aligned box in real-valued pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl From<PixelRect> for BBox {
    fn from(r: PixelRect) -> Self {
        BBox::new(f64::from(r.x0), f64::from(r.y0), f64::from(r.x1), f64::from(r.y1))
    }
}

impl BBox {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        BBox { x_min, y_min, x_max, y_max }
    }

    pub fn is_valid(&self) -> bool {
        self.x_min <= self.x_max && self.y_min <= self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }
}

/// Detector box with its confidence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredBox {
    pub bbox: BBox,
    pub score: f64,
}

pub fn box_iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let ih = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Grows width and height by `factor` about the center, then clips to the frame.
pub fn expand_box(b: &BBox, factor: f64, frame_w: u32, frame_h: u32) -> BBox {
    let gx = b.width() * factor / 2.0;
    let gy = b.height() * factor / 2.0;
    let (fw, fh) = (f64::from(frame_w), f64::from(frame_h));
    BBox::new(
        (b.x_min - gx).clamp(0.0, fw),
        (b.y_min - gy).clamp(0.0, fh),
        (b.x_max + gx).clamp(0.0, fw),
        (b.y_max + gy).clamp(0.0, fh),
    )
}

/// Dense row-major real-valued map covering the pixel cells of a box.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMap {
    /// Pixel column/row of the top-left cell.
    pub origin: (i64, i64),
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl AttentionMap {
    pub fn at(&self, col: usize, row: usize) -> f32 {
        self.values[row * self.width + col]
    }
}

/// Builds the attention map over `outer`: mask values inside `inner`, `fill`
/// on the ring between the two boxes.
///
/// A pixel cell belongs to a box when its center lies inside it; the map spans
/// every cell whose center lies in `outer`.
pub fn pad_mask_region(m: &BitMask, inner: &BBox, outer: &BBox, fill: f32) -> Result<AttentionMap> {
    if !inner.is_valid() || !outer.is_valid() {
        return Err(Error::InvalidArgument("box has min > max".into()));
    }
    if !outer.contains(inner) {
        return Err(Error::InvalidArgument(format!(
            "inner box {inner:?} not contained in outer box {outer:?}"
        )));
    }
    let cells = |lo: f64, hi: f64| -> (i64, i64) {
        // centers c + 0.5 within [lo, hi]
        let first = (lo - 0.5).ceil() as i64;
        let last = (hi - 0.5).floor() as i64;
        (first, (last + 1).max(first))
    };
    let (cx0, cx1) = cells(outer.x_min, outer.x_max);
    let (cy0, cy1) = cells(outer.y_min, outer.y_max);
    let inside = |c: i64, lo: f64, hi: f64| {
        let center = c as f64 + 0.5;
        center >= lo && center <= hi
    };
    let dense = m.to_row_major();
    let (fw, fh) = (i64::from(m.width()), i64::from(m.height()));
    let width = (cx1 - cx0) as usize;
    let height = (cy1 - cy0) as usize;
    let mut values = Vec::with_capacity(width * height);
    for y in cy0..cy1 {
        for x in cx0..cx1 {
            let v = if inside(x, inner.x_min, inner.x_max) && inside(y, inner.y_min, inner.y_max) {
                if x >= 0 && y >= 0 && x < fw && y < fh && dense[(y * fw + x) as usize] != 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                fill
            };
            values.push(v);
        }
    }
    Ok(AttentionMap {
        origin: (cx0, cy0),
        width,
        height,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_iou_cases() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(box_iou(&a, &a), 1.0);
        assert_eq!(box_iou(&a, &BBox::new(20.0, 20.0, 30.0, 30.0)), 0.0);
        let b = BBox::new(5.0, 0.0, 15.0, 10.0);
        assert!((box_iou(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
        let degenerate = BBox::new(1.0, 1.0, 1.0, 1.0);
        assert_eq!(box_iou(&degenerate, &degenerate), 0.0);
    }

    #[test]
    fn expand_box_cases() {
        let b = BBox::new(10.0, 10.0, 110.0, 110.0);
        assert_eq!(expand_box(&b, 0.0, 200, 200), b);
        assert_eq!(expand_box(&b, 0.2, 200, 200), BBox::new(0.0, 0.0, 120.0, 120.0));
        let full = BBox::new(0.0, 0.0, 100.0, 100.0);
        assert_eq!(expand_box(&full, 0.2, 100, 100), full);
    }

    #[test]
    fn pad_full_mask_ring() {
        let m = BitMask::from_fn(6, 6, |_, _| true).unwrap();
        let inner = BBox::new(1.0, 1.0, 5.0, 5.0);
        let outer = BBox::new(0.0, 0.0, 6.0, 6.0);
        let map = pad_mask_region(&m, &inner, &outer, 0.5).unwrap();
        assert_eq!((map.width, map.height), (6, 6));
        assert_eq!(map.values.iter().filter(|&&v| v == 1.0).count(), 16);
        assert_eq!(map.values.iter().filter(|&&v| v == 0.5).count(), 20);
    }

    #[test]
    fn pad_empty_mask() {
        let m = BitMask::empty(8, 8).unwrap();
        let inner = BBox::new(2.0, 2.0, 4.0, 4.0);
        let outer = BBox::new(1.0, 1.0, 5.0, 5.0);
        let map = pad_mask_region(&m, &inner, &outer, 0.5).unwrap();
        assert_eq!(map.values.iter().filter(|&&v| v == 0.0).count(), 4);
        assert_eq!(map.values.iter().filter(|&&v| v == 0.5).count(), 12);
    }

    #[test]
    fn pad_same_boxes_is_restriction() {
        let m = BitMask::from_fn(8, 8, |x, y| (x + y) % 3 == 0).unwrap();
        let b = BBox::new(2.0, 1.0, 6.0, 7.0);
        let map = pad_mask_region(&m, &b, &b, 0.5).unwrap();
        assert_eq!((map.width, map.height), (4, 6));
        for r in 0..6 {
            for c in 0..4 {
                let want = if m.get(c as u32 + 2, r as u32 + 1) { 1.0 } else { 0.0 };
                assert_eq!(map.at(c, r), want);
            }
        }
    }

    #[test]
    fn pad_rejects_uncontained_inner() {
        let m = BitMask::empty(8, 8).unwrap();
        let err = pad_mask_region(&m, &BBox::new(0.0, 0.0, 5.0, 5.0), &BBox::new(1.0, 1.0, 4.0, 4.0), 0.5);
        assert!(err.is_err());
    }
}
