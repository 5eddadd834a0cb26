//! Dense backward flow fields and mask warping.
//!
//! Flow is backward: pixel `(x, y)` of frame `i` corresponds to
//! `(x + dx, y + dy)` in frame `i - 1`. Warping samples the previous mask at
//! the nearest integer of that location; samples outside the frame are
//! background.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::maskcore::{BitMask, RleBuilder};

pub const OVSF_MAGIC: &[u8; 4] = b"OVSF";

#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    width: u32,
    height: u32,
    dx: Vec<f32>,
    dy: Vec<f32>,
    max_abs_dx: f32,
    max_abs_dy: f32,
}

impl FlowField {
    /// `dx`/`dy` are row-major, one entry per pixel.
    pub fn new(width: u32, height: u32, dx: Vec<f32>, dy: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Flow(format!("dimensions must be positive, got {width}x{height}")));
        }
        let n = width as usize * height as usize;
        if dx.len() != n || dy.len() != n {
            return Err(Error::Flow(format!(
                "expected {n} displacements, got dx={} dy={}",
                dx.len(),
                dy.len()
            )));
        }
        let mut max_abs_dx = 0.0f32;
        let mut max_abs_dy = 0.0f32;
        for (&a, &b) in dx.iter().zip(&dy) {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::Flow("non-finite displacement".into()));
            }
            max_abs_dx = max_abs_dx.max(a.abs());
            max_abs_dy = max_abs_dy.max(b.abs());
        }
        Ok(FlowField {
            width,
            height,
            dx,
            dy,
            max_abs_dx,
            max_abs_dy,
        })
    }

    /// All-zero displacement field.
    pub fn identity(width: u32, height: u32) -> Result<Self> {
        let n = width as usize * height as usize;
        Self::new(width, height, vec![0.0; n], vec![0.0; n])
    }

    /// Constant displacement everywhere.
    pub fn constant(width: u32, height: u32, dx: f32, dy: f32) -> Result<Self> {
        let n = width as usize * height as usize;
        Self::new(width, height, vec![dx; n], vec![dy; n])
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> (f32, f32)) -> Result<Self> {
        let n = width as usize * height as usize;
        let mut dx = Vec::with_capacity(n);
        let mut dy = Vec::with_capacity(n);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                dx.push(a);
                dy.push(b);
            }
        }
        Self::new(width, height, dx, dy)
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

    pub fn at(&self, x: u32, y: u32) -> (f32, f32) {
        let i = y as usize * self.width as usize + x as usize;
        (self.dx[i], self.dy[i])
    }

    /// True when every displacement rounds to zero, i.e. warping is a no-op.
    pub fn is_identity(&self) -> bool {
        self.max_abs_dx < 0.5 && self.max_abs_dy < 0.5
    }

    pub fn write_ovsf<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(OVSF_MAGIC)?;
        w.write_all(&self.width.to_le_bytes())?;
        w.write_all(&self.height.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.dx.len() * 8);
        for (a, b) in self.dx.iter().zip(&self.dy) {
            buf.extend_from_slice(&a.to_le_bytes());
            buf.extend_from_slice(&b.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_ovsf<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 12];
        r.read_exact(&mut head)
            .map_err(|e| Error::Flow(format!("truncated header: {e}")))?;
        if &head[..4] != OVSF_MAGIC {
            return Err(Error::Flow("bad magic".into()));
        }
        let width = u32::from_le_bytes(head[4..8].try_into().unwrap());
        let height = u32::from_le_bytes(head[8..12].try_into().unwrap());
        let n = width as usize * height as usize;
        let mut body = vec![0u8; n * 8];
        r.read_exact(&mut body)
            .map_err(|e| Error::Flow(format!("truncated body: {e}")))?;
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Flow("trailing bytes after flow data".into()));
        }
        let mut dx = Vec::with_capacity(n);
        let mut dy = Vec::with_capacity(n);
        for pair in body.chunks_exact(8) {
            dx.push(f32::from_le_bytes(pair[..4].try_into().unwrap()));
            dy.push(f32::from_le_bytes(pair[4..].try_into().unwrap()));
        }
        Self::new(width, height, dx, dy)
    }
}

/// Identity flow for a frame of the given size.
pub fn compose_identity(width: u32, height: u32) -> Result<FlowField> {
    FlowField::identity(width, height)
}

/// Resamples `prev` into the current frame with nearest-neighbour backward sampling.
pub fn warp_mask(prev: &BitMask, flow: &FlowField) -> Result<BitMask> {
    if prev.dims() != flow.dims() {
        return Err(Error::dims(prev.dims(), flow.dims()));
    }
    if flow.is_identity() {
        return Ok(prev.clone());
    }
    let (w, h) = prev.dims();
    let Some(bb) = prev.bbox() else {
        return BitMask::empty(w, h);
    };
    // dense copy of the source bounding rectangle
    let bw = (bb.x1 - bb.x0) as usize;
    let bh = (bb.y1 - bb.y0) as usize;
    let mut src = vec![false; bw * bh];
    for (s, e) in prev.fg_runs() {
        for idx in s..e {
            let (x, y) = (idx / h, idx % h);
            src[(y - bb.y0) as usize * bw + (x - bb.x0) as usize] = true;
        }
    }
    // only targets within reach of the source rectangle can be foreground
    let reach_x = flow.max_abs_dx.ceil() as i64 + 1;
    let reach_y = flow.max_abs_dy.ceil() as i64 + 1;
    let tx0 = (i64::from(bb.x0) - reach_x).max(0) as u32;
    let tx1 = (i64::from(bb.x1) + reach_x).min(i64::from(w)) as u32;
    let ty0 = (i64::from(bb.y0) - reach_y).max(0) as u32;
    let ty1 = (i64::from(bb.y1) + reach_y).min(i64::from(h)) as u32;

    let sample = |x: u32, y: u32| -> bool {
        let (dx, dy) = flow.at(x, y);
        let sx = (f64::from(x) + f64::from(dx)).round();
        let sy = (f64::from(y) + f64::from(dy)).round();
        if sx < f64::from(bb.x0) || sy < f64::from(bb.y0) || sx >= f64::from(bb.x1) || sy >= f64::from(bb.y1) {
            return false;
        }
        src[(sy as u32 - bb.y0) as usize * bw + (sx as u32 - bb.x0) as usize]
    };

    let mut b = RleBuilder::new();
    b.push(false, tx0 * h);
    for x in tx0..tx1 {
        b.push(false, ty0);
        for y in ty0..ty1 {
            b.push(sample(x, y), 1);
        }
        b.push(false, h - ty1);
    }
    b.push(false, (w - tx1) * h);
    b.finish(w, h)
}
