//! Scene rasterisation, detector noise and candidate synthesis.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::spec::{ObjectSpec, SceneSpec};
use crate::cascade::Candidate;
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::maskcore::morph::{grow_rect, Grid};
use crate::maskcore::{BBox, BitMask, PixelRect, RleBuilder};
use crate::reid::{Embedding, EMBED_DIM};

/// Everything the simulator knows about one frame.
#[derive(Clone, Debug)]
pub struct SimFrame {
    pub frame_id: u64,
    /// Occlusion-resolved masks for every object (empty when not visible).
    pub gt: BTreeMap<u32, BitMask>,
    pub candidates: Vec<Candidate>,
    /// Object id behind each candidate; `None` for false positives.
    pub candidate_sources: Vec<Option<u32>>,
    /// Backward flow to the previous frame; `None` when it is identity.
    pub flow: Option<FlowField>,
}

/// Deterministic stream derived from the scene seed, a purpose tag and an index.
pub fn sub_rng(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    // FNV-1a over the tag
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ h);
    rng.set_stream(index);
    rng
}

/// A validated scene whose frames can be rendered independently.
#[derive(Clone, Debug)]
pub struct Simulation {
    spec: SceneSpec,
    /// Objects sorted back to front (painting order).
    paint_order: Vec<usize>,
    full_areas: Vec<u64>,
}

impl Simulation {
    pub fn new(spec: SceneSpec) -> Result<Self> {
        spec.validate()?;
        let mut paint_order: Vec<usize> = (0..spec.objects.len()).collect();
        // farthest first; on equal depth the lower id ends on top
        paint_order.sort_by(|&a, &b| {
            let (oa, ob) = (&spec.objects[a], &spec.objects[b]);
            ob.depth.cmp(&oa.depth).then(ob.id.cmp(&oa.id))
        });
        let full_areas = spec.objects.iter().map(ObjectSpec::full_area).collect();
        Ok(Simulation {
            spec,
            paint_order,
            full_areas,
        })
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn len(&self) -> u32 {
        self.spec.frames
    }

    pub fn is_empty(&self) -> bool {
        self.spec.frames == 0
    }

    /// Embedding centroid of object slot `k`; slot `EMBED_DIM - 1` is background.
    fn centroid_axis(&self, slot: usize) -> (usize, f64) {
        (slot, self.spec.embedding.centroid_spacing / std::f64::consts::SQRT_2)
    }

    fn sample_embedding(&self, slot: usize, rng: &mut ChaCha8Rng) -> Embedding {
        let (axis, mag) = self.centroid_axis(slot);
        let per_coord = self.spec.embedding.noise_sigma / (EMBED_DIM as f64).sqrt();
        let noise = Normal::new(0.0, per_coord).expect("finite sigma");
        let values = (0..EMBED_DIM)
            .map(|k| {
                let base = if k == axis { mag } else { 0.0 };
                (base + noise.sample(rng)) as f32
            })
            .collect();
        Embedding::new(values).expect("finite embedding")
    }

    /// Per-pixel owner (object index + 1, 0 = background), row-major.
    fn labels(&self, t: u32) -> Vec<u16> {
        let (w, h) = (self.spec.width as i64, self.spec.height as i64);
        let mut lab = vec![0u16; (w * h) as usize];
        for &k in &self.paint_order {
            let o = &self.spec.objects[k];
            let (px, py) = o.position(t);
            for v in 0..o.size[1] {
                let y = py + i64::from(v);
                if y < 0 || y >= h {
                    continue;
                }
                for u in 0..o.size[0] {
                    let x = px + i64::from(u);
                    if x >= 0 && x < w && o.covers(u, v) {
                        lab[(y * w + x) as usize] = k as u16 + 1;
                    }
                }
            }
        }
        lab
    }

    fn object_rect(&self, k: usize, t: u32) -> Option<PixelRect> {
        let o = &self.spec.objects[k];
        let (px, py) = o.position(t);
        let (w, h) = (i64::from(self.spec.width), i64::from(self.spec.height));
        let x0 = px.clamp(0, w);
        let x1 = (px + i64::from(o.size[0])).clamp(0, w);
        let y0 = py.clamp(0, h);
        let y1 = (py + i64::from(o.size[1])).clamp(0, h);
        (x0 < x1 && y0 < y1).then(|| PixelRect {
            x0: x0 as u32,
            y0: y0 as u32,
            x1: x1 as u32,
            y1: y1 as u32,
        })
    }

    fn mask_from_labels(&self, lab: &[u16], label: u16, rect: Option<PixelRect>) -> Result<BitMask> {
        let (w, h) = (self.spec.width, self.spec.height);
        let Some(r) = rect else {
            return BitMask::empty(w, h);
        };
        let mut b = RleBuilder::new();
        b.push(false, r.x0 * h);
        for x in r.x0..r.x1 {
            b.push(false, r.y0);
            for y in r.y0..r.y1 {
                b.push(lab[(y * w + x) as usize] == label, 1);
            }
            b.push(false, h - r.y1);
        }
        b.push(false, (w - r.x1) * h);
        b.finish(w, h)
    }

    /// Occlusion-resolved ground-truth masks at frame `t`.
    pub fn ground_truth(&self, t: u32) -> Result<BTreeMap<u32, BitMask>> {
        let lab = self.labels(t);
        self.gt_from_labels(&lab, t)
    }

    fn gt_from_labels(&self, lab: &[u16], t: u32) -> Result<BTreeMap<u32, BitMask>> {
        self.spec
            .objects
            .iter()
            .enumerate()
            .map(|(k, o)| Ok((o.id, self.mask_from_labels(lab, k as u16 + 1, self.object_rect(k, t))?)))
            .collect()
    }

    fn flow_from_labels(&self, lab: &[u16], t: u32) -> Result<Option<FlowField>> {
        if t == 0 {
            return Ok(None);
        }
        let moves: Vec<(f32, f32)> = self
            .spec
            .objects
            .iter()
            .map(|o| {
                let (x0, y0) = o.position(t - 1);
                let (x1, y1) = o.position(t);
                ((x0 - x1) as f32, (y0 - y1) as f32)
            })
            .collect();
        let moving = |l: u16| l > 0 && moves[l as usize - 1] != (0.0, 0.0);
        if !lab.iter().any(|&l| moving(l)) {
            return Ok(None);
        }
        let mut dx = vec![0.0f32; lab.len()];
        let mut dy = vec![0.0f32; lab.len()];
        for (i, &l) in lab.iter().enumerate() {
            if l > 0 {
                let (a, b) = moves[l as usize - 1];
                dx[i] = a;
                dy[i] = b;
            }
        }
        FlowField::new(self.spec.width, self.spec.height, dx, dy).map(Some)
    }

    pub fn frame(&self, t: u32) -> Result<SimFrame> {
        if t >= self.spec.frames {
            return Err(Error::InvalidArgument(format!("frame {t} beyond scene length {}", self.spec.frames)));
        }
        let lab = self.labels(t);
        let gt = self.gt_from_labels(&lab, t)?;
        let flow = self.flow_from_labels(&lab, t)?;
        let (candidates, candidate_sources) = self.detect(&gt, t)?;
        Ok(SimFrame {
            frame_id: u64::from(t),
            gt,
            candidates,
            candidate_sources,
            flow,
        })
    }

    pub fn frames(&self) -> impl Iterator<Item = Result<SimFrame>> + '_ {
        (0..self.spec.frames).map(move |t| self.frame(t))
    }

    /// Whether object `k` is visible enough at `t` to be detected at all.
    pub fn detectable(&self, k: usize, visible_area: u64) -> bool {
        visible_area > 0
            && visible_area as f64 >= self.spec.detector.min_visible_fraction * self.full_areas[k] as f64
    }

    fn detect(&self, gt: &BTreeMap<u32, BitMask>, t: u32) -> Result<(Vec<Candidate>, Vec<Option<u32>>)> {
        let d = &self.spec.detector;
        let mut rng = sub_rng(self.spec.seed, "detector", u64::from(t));
        let mut out: Vec<(Candidate, Option<u32>)> = Vec::new();
        let score = |rng: &mut ChaCha8Rng| {
            if d.score_max > d.score_min {
                rng.gen_range(d.score_min..d.score_max)
            } else {
                d.score_min
            }
        };
        for (k, o) in self.spec.objects.iter().enumerate() {
            let visible = &gt[&o.id];
            if !self.detectable(k, visible.area()) {
                continue;
            }
            if rng.gen::<f64>() < d.miss_prob {
                continue;
            }
            let copies = if rng.gen::<f64>() < d.duplicate_rate { 2 } else { 1 };
            for c in 0..copies {
                let mask = jitter_mask(visible, d.jitter, &mut rng)?;
                let Some(rect) = mask.bbox() else { continue };
                let mut s = score(&mut rng);
                if c > 0 {
                    s *= 0.8;
                }
                let embedding = self.sample_embedding(k, &mut rng);
                out.push((
                    Candidate {
                        bbox: BBox::from(rect),
                        score: s,
                        mask,
                        embedding,
                    },
                    Some(o.id),
                ));
            }
        }
        let n_fp = d.fp_rate.floor() as usize + usize::from(rng.gen::<f64>() < d.fp_rate.fract());
        let (w, h) = (self.spec.width, self.spec.height);
        for _ in 0..n_fp {
            let fw = rng.gen_range(6.min(w.min(40))..=w.min(40));
            let fh = rng.gen_range(6.min(h.min(40))..=h.min(40));
            let x0 = rng.gen_range(0..=w - fw);
            let y0 = rng.gen_range(0..=h - fh);
            let rect = PixelRect { x0, y0, x1: x0 + fw, y1: y0 + fh };
            let mask = BitMask::from_rect(w, h, rect)?;
            let s = rng.gen_range(0.06..0.5);
            let embedding = self.sample_embedding(EMBED_DIM - 1, &mut rng);
            out.push((
                Candidate {
                    bbox: BBox::from(rect),
                    score: s,
                    mask,
                    embedding,
                },
                None,
            ));
        }
        out.shuffle(&mut rng);
        Ok(out.into_iter().unzip())
    }
}

/// Independent per-edge dilation (positive) or erosion (negative) by up to
/// `amp` pixels on each of the four sides.
pub fn jitter_mask(m: &BitMask, amp: u32, rng: &mut impl Rng) -> Result<BitMask> {
    if amp == 0 {
        return Ok(m.clone());
    }
    let Some(bb) = m.bbox() else {
        return Ok(m.clone());
    };
    let a = amp as i32;
    let edges: [i32; 4] = [
        rng.gen_range(-a..=a),
        rng.gen_range(-a..=a),
        rng.gen_range(-a..=a),
        rng.gen_range(-a..=a),
    ];
    let rect = grow_rect(bb, amp, m.width(), m.height());
    let mut g = Grid::from_mask(m, rect);
    let (w, h) = (g.width() as i64, g.height() as i64);
    // (dx, dy) of the outward direction for left, right, top, bottom
    for (side, &e) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().zip(&edges) {
        if e == 0 {
            continue;
        }
        let src = g.data.clone();
        let at = |c: i64, r: i64| c >= 0 && r >= 0 && c < w && r < h && src[(r * w + c) as usize];
        let n = i64::from(e.unsigned_abs());
        for r in 0..h {
            for c in 0..w {
                let v = if e > 0 {
                    // grow outward: inherit from pixels further inside
                    (0..=n).any(|k| at(c - side.0 * k, r - side.1 * k))
                } else {
                    // shrink: drop pixels within n of the outer side's background
                    at(c, r) && (1..=n).all(|k| at(c + side.0 * k, r + side.1 * k))
                };
                g.data[(r * w + c) as usize] = v;
            }
        }
    }
    g.to_mask()
}
