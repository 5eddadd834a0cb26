//! Dense binary morphology on a cropped window of a mask.

use super::rle::{BitMask, PixelRect, RleBuilder};
use crate::error::Result;

/// Row-major boolean window `[x0, x0 + w) x [y0, y0 + h)` of a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub frame: (u32, u32),
    pub rect: PixelRect,
    pub data: Vec<bool>,
}

impl Grid {
    pub fn from_mask(m: &BitMask, rect: PixelRect) -> Grid {
        let w = (rect.x1 - rect.x0) as usize;
        let h = (rect.y1 - rect.y0) as usize;
        let mut data = vec![false; w * h];
        let fh = m.height();
        for (s, e) in m.fg_runs() {
            let mut idx = s;
            while idx < e {
                let (x, y) = (idx / fh, idx % fh);
                // rest of this column within the run
                let col_end = ((x + 1) * fh).min(e);
                if x >= rect.x0 && x < rect.x1 {
                    let ya = y.max(rect.y0);
                    let yb = (y + (col_end - idx)).min(rect.y1);
                    for yy in ya..yb {
                        data[(yy - rect.y0) as usize * w + (x - rect.x0) as usize] = true;
                    }
                }
                idx = col_end;
            }
        }
        Grid {
            frame: m.dims(),
            rect,
            data,
        }
    }

    pub fn width(&self) -> usize {
        (self.rect.x1 - self.rect.x0) as usize
    }

    pub fn height(&self) -> usize {
        (self.rect.y1 - self.rect.y0) as usize
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.data[row * self.width() + col]
    }

    pub fn to_mask(&self) -> Result<BitMask> {
        let (fw, fh) = self.frame;
        let r = self.rect;
        let w = self.width();
        let mut b = RleBuilder::new();
        b.push(false, r.x0 * fh);
        for x in r.x0..r.x1 {
            b.push(false, r.y0);
            for y in r.y0..r.y1 {
                b.push(self.data[(y - r.y0) as usize * w + (x - r.x0) as usize], 1);
            }
            b.push(false, fh - r.y1);
        }
        b.push(false, (fw - r.x1) * fh);
        b.finish(fw, fh)
    }

    /// Square (Chebyshev radius `r`) dilation; cells outside the window are background.
    pub fn dilate(&self, r: usize) -> Grid {
        self.filter(r, true, [false; 4])
    }

    /// Square erosion. Cells outside the window count as foreground on sides
    /// where the window touches the frame edge and background elsewhere.
    pub fn erode(&self, r: usize) -> Grid {
        let (fw, fh) = self.frame;
        let pad = [
            self.rect.x0 == 0,
            self.rect.x1 == fw,
            self.rect.y0 == 0,
            self.rect.y1 == fh,
        ];
        self.filter(r, false, pad)
    }

    // any=true: max filter, any=false: min filter. pad = [left, right, top, bottom].
    fn filter(&self, r: usize, any: bool, pad: [bool; 4]) -> Grid {
        let (w, h) = (self.width(), self.height());
        let mut tmp = vec![false; w * h];
        let mut line = Vec::new();
        for row in 0..h {
            line.clear();
            line.extend_from_slice(&self.data[row * w..(row + 1) * w]);
            let out = window_1d(&line, r, any, pad[0], pad[1]);
            tmp[row * w..(row + 1) * w].copy_from_slice(&out);
        }
        let mut data = vec![false; w * h];
        for col in 0..w {
            line.clear();
            line.extend((0..h).map(|row| tmp[row * w + col]));
            let out = window_1d(&line, r, any, pad[2], pad[3]);
            for (row, v) in out.into_iter().enumerate() {
                data[row * w + col] = v;
            }
        }
        Grid {
            frame: self.frame,
            rect: self.rect,
            data,
        }
    }
}

fn window_1d(line: &[bool], r: usize, any: bool, pad_lo: bool, pad_hi: bool) -> Vec<bool> {
    let n = line.len();
    let mut prefix = vec![0usize; n + 1];
    for (i, &v) in line.iter().enumerate() {
        prefix[i + 1] = prefix[i] + usize::from(v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(r);
            let hi = (i + r + 1).min(n);
            let ones = prefix[hi] - prefix[lo];
            let missing_lo = r.saturating_sub(i);
            let missing_hi = (i + r + 1).saturating_sub(n);
            let pad_ones = if pad_lo { missing_lo } else { 0 } + if pad_hi { missing_hi } else { 0 };
            let total = ones + pad_ones;
            if any {
                total > 0
            } else {
                total == 2 * r + 1
            }
        })
        .collect()
}

/// Bounding rectangle grown by `margin` pixels and clipped to the frame.
pub fn grow_rect(r: PixelRect, margin: u32, width: u32, height: u32) -> PixelRect {
    PixelRect {
        x0: r.x0.saturating_sub(margin),
        y0: r.y0.saturating_sub(margin),
        x1: r.x1.saturating_add(margin).min(width),
        y1: r.y1.saturating_add(margin).min(height),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_roundtrip() {
        let m = BitMask::from_fn(9, 7, |x, y| (x * 3 + y) % 4 == 0).unwrap();
        let g = Grid::from_mask(&m, PixelRect { x0: 0, y0: 0, x1: 9, y1: 7 });
        assert_eq!(g.to_mask().unwrap(), m);
        let bb = m.bbox().unwrap();
        assert_eq!(Grid::from_mask(&m, bb).to_mask().unwrap(), m);
    }

    #[test]
    fn dilate_then_erode_single_pixel() {
        let m = BitMask::from_fn(9, 9, |x, y| x == 4 && y == 4).unwrap();
        let g = Grid::from_mask(&m, PixelRect { x0: 0, y0: 0, x1: 9, y1: 9 });
        let d = g.dilate(1);
        assert_eq!(d.data.iter().filter(|&&v| v).count(), 9);
        assert_eq!(d.erode(1), g);
    }

    #[test]
    fn erosion_keeps_frame_edge() {
        let m = BitMask::from_fn(5, 5, |_, _| true).unwrap();
        let g = Grid::from_mask(&m, PixelRect { x0: 0, y0: 0, x1: 5, y1: 5 });
        assert!(g.erode(2).data.iter().all(|&v| v));
    }
}
