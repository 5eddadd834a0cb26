use crate::error::{Error, Result};

/// Binary mask stored as column-major run lengths.
///
/// `counts` alternates background and foreground runs and always starts with
/// a background run, which may be zero-length. Pixel `(x, y)` lives at flat
/// index `y + height * x`. Masks built through the public constructors are
/// canonical: every run after the first is non-empty, so structural equality
/// is pixel equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitMask {
    width: u32,
    height: u32,
    counts: Vec<u32>,
}

/// Inclusive-exclusive pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    pub fn intersects(&self, other: &PixelRect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }
}

/// Incremental run-length encoder for pixels visited in column-major order.
#[derive(Debug, Default)]
pub struct RleBuilder {
    counts: Vec<u32>,
    total: u64,
}

impl RleBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: bool, len: u32) {
        if len == 0 {
            return;
        }
        self.total += u64::from(len);
        if self.counts.is_empty() {
            if value {
                self.counts.push(0);
            }
            self.counts.push(len);
            return;
        }
        let last_is_fg = self.counts.len() % 2 == 0;
        if last_is_fg == value {
            *self.counts.last_mut().unwrap() += len;
        } else {
            self.counts.push(len);
        }
    }

    pub fn finish(self, width: u32, height: u32) -> Result<BitMask> {
        let expected = u64::from(width) * u64::from(height);
        if self.total != expected {
            return Err(Error::InvalidMask(format!(
                "runs cover {} pixels, frame has {}",
                self.total, expected
            )));
        }
        Ok(BitMask {
            width,
            height,
            counts: self.counts,
        })
    }
}

fn check_dims(width: u32, height: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidMask(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if u64::from(width) * u64::from(height) > u64::from(u32::MAX) {
        return Err(Error::InvalidMask("frame too large".into()));
    }
    Ok(())
}

impl BitMask {
    pub fn empty(width: u32, height: u32) -> Result<Self> {
        check_dims(width, height)?;
        Ok(BitMask {
            width,
            height,
            counts: vec![width * height],
        })
    }

    /// Builds a mask from raw counts, merging any interior zero-length runs.
    pub fn from_counts(width: u32, height: u32, counts: &[u32]) -> Result<Self> {
        check_dims(width, height)?;
        let mut b = RleBuilder::new();
        for (i, &c) in counts.iter().enumerate() {
            b.push(i % 2 == 1, c);
        }
        b.finish(width, height)
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        check_dims(width, height)?;
        let mut b = RleBuilder::new();
        for x in 0..width {
            for y in 0..height {
                b.push(f(x, y), 1);
            }
        }
        b.finish(width, height)
    }

    /// Dense row-major input, nonzero = foreground.
    pub fn from_row_major(width: u32, height: u32, pixels: &[u8]) -> Result<Self> {
        check_dims(width, height)?;
        if pixels.len() as u64 != u64::from(width) * u64::from(height) {
            return Err(Error::InvalidMask(format!(
                "expected {} pixels, got {}",
                u64::from(width) * u64::from(height),
                pixels.len()
            )));
        }
        let w = width as usize;
        Self::from_fn(width, height, |x, y| pixels[y as usize * w + x as usize] != 0)
    }

    /// Filled axis-aligned rectangle, clipped to the frame.
    pub fn from_rect(width: u32, height: u32, rect: PixelRect) -> Result<Self> {
        check_dims(width, height)?;
        let x0 = rect.x0.min(width);
        let x1 = rect.x1.min(width);
        let y0 = rect.y0.min(height);
        let y1 = rect.y1.min(height);
        let mut b = RleBuilder::new();
        for x in 0..width {
            if x < x0 || x >= x1 || y0 >= y1 {
                b.push(false, height);
            } else {
                b.push(false, y0);
                b.push(true, y1 - y0);
                b.push(false, height - y1);
            }
        }
        b.finish(width, height)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| u64::from(c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.len() <= 1
    }

    /// Foreground runs as `[start, end)` flat column-major indices.
    pub fn fg_runs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let mut pos = 0u32;
        self.counts.iter().enumerate().filter_map(move |(i, &c)| {
            let start = pos;
            pos += c;
            (i % 2 == 1).then_some((start, pos))
        })
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        if x >= self.width || y >= self.height {
            return false;
        }
        let idx = y + self.height * x;
        self.fg_runs().any(|(s, e)| s <= idx && idx < e)
    }

    pub fn to_row_major(&self) -> Vec<u8> {
        let (w, h) = (self.width as usize, self.height as usize);
        let mut out = vec![0u8; w * h];
        for (s, e) in self.fg_runs() {
            for idx in s as usize..e as usize {
                out[(idx % h) * w + idx / h] = 1;
            }
        }
        out
    }

    /// Tight pixel bounding rectangle, `None` for an empty mask.
    pub fn bbox(&self) -> Option<PixelRect> {
        let h = self.height;
        let mut r: Option<PixelRect> = None;
        for (s, e) in self.fg_runs() {
            let (xa, ya) = (s / h, s % h);
            let last = e - 1;
            let (xb, yb) = (last / h, last % h);
            let (y0, y1) = if xa == xb { (ya, yb + 1) } else { (0, h) };
            r = Some(match r {
                None => PixelRect { x0: xa, y0, x1: xb + 1, y1 },
                Some(p) => PixelRect {
                    x0: p.x0.min(xa),
                    y0: p.y0.min(y0),
                    x1: p.x1.max(xb + 1),
                    y1: p.y1.max(y1),
                },
            });
        }
        r
    }

    pub fn intersection_area(&self, other: &BitMask) -> Result<u64> {
        self.check_same_dims(other)?;
        let mut a = self.fg_runs().peekable();
        let mut b = other.fg_runs().peekable();
        let mut total = 0u64;
        while let (Some(&(as_, ae)), Some(&(bs, be))) = (a.peek(), b.peek()) {
            let lo = as_.max(bs);
            let hi = ae.min(be);
            if lo < hi {
                total += u64::from(hi - lo);
            }
            if ae <= be {
                a.next();
            } else {
                b.next();
            }
        }
        Ok(total)
    }

    pub(crate) fn check_same_dims(&self, other: &BitMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }

    /// Shifts the mask by an integer offset; pixels leaving the frame are dropped.
    pub fn translate(&self, dx: i64, dy: i64) -> BitMask {
        let (w, h) = (i64::from(self.width), i64::from(self.height));
        let src = self.to_row_major();
        BitMask::from_fn(self.width, self.height, |x, y| {
            let (sx, sy) = (i64::from(x) - dx, i64::from(y) - dy);
            sx >= 0 && sy >= 0 && sx < w && sy < h && src[(sy * w + sx) as usize] != 0
        })
        .expect("dimensions already validated")
    }
}

/// Intersection over union. Two empty masks score 1.0.
pub fn mask_iou(a: &BitMask, b: &BitMask) -> Result<f64> {
    let inter = a.intersection_area(b)?;
    let union = a.area() + b.area() - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}
