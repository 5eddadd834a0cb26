use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reid::EMBED_DIM;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Rectangle,
    Ellipse,
}

/// Top-left position of an object at a given frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Waypoint {
    pub frame: u32,
    pub x: i32,
    pub y: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: u32,
    pub shape: Shape,
    /// `[width, height]` in pixels.
    pub size: [u32; 2],
    /// Piecewise-linear track; positions are rounded to whole pixels.
    pub waypoints: Vec<Waypoint>,
    /// Smaller is nearer the camera.
    pub depth: i32,
}

impl ObjectSpec {
    /// Integer top-left position at frame `t`, clamped to the first/last waypoint.
    pub fn position(&self, t: u32) -> (i64, i64) {
        let w = &self.waypoints;
        let first = w[0];
        let last = w[w.len() - 1];
        if t <= first.frame {
            return (i64::from(first.x), i64::from(first.y));
        }
        if t >= last.frame {
            return (i64::from(last.x), i64::from(last.y));
        }
        let k = w.windows(2).position(|p| t < p[1].frame).expect("bracketing waypoint");
        let (a, b) = (w[k], w[k + 1]);
        let s = f64::from(t - a.frame) / f64::from(b.frame - a.frame);
        let lerp = |p: i32, q: i32| (f64::from(p) + s * f64::from(q - p)).round() as i64;
        (lerp(a.x, b.x), lerp(a.y, b.y))
    }

    /// Whether local pixel `(u, v)` of the object's box belongs to the shape.
    pub fn covers(&self, u: u32, v: u32) -> bool {
        match self.shape {
            Shape::Rectangle => u < self.size[0] && v < self.size[1],
            Shape::Ellipse => {
                let (a, b) = (f64::from(self.size[0]) / 2.0, f64::from(self.size[1]) / 2.0);
                let dx = (f64::from(u) + 0.5 - a) / a;
                let dy = (f64::from(v) + 0.5 - b) / b;
                dx * dx + dy * dy <= 1.0
            }
        }
    }

    pub fn full_area(&self) -> u64 {
        let mut n = 0;
        for v in 0..self.size[1] {
            for u in 0..self.size[0] {
                n += u64::from(self.covers(u, v));
            }
        }
        n
    }
}

/// Appearance model: object `k` (in spec order) sits at `spacing / sqrt(2)`
/// along basis axis `k`, so all centroids are pairwise `spacing` apart.
/// Noise is isotropic with total RMS norm `noise_sigma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub centroid_spacing: f64,
    pub noise_sigma: f64,
}

impl Default for EmbeddingModel {
    fn default() -> Self {
        EmbeddingModel {
            centroid_spacing: 4.0,
            noise_sigma: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub miss_prob: f64,
    /// Expected false positives per frame.
    pub fp_rate: f64,
    /// Max per-edge dilation/erosion in pixels.
    pub jitter: u32,
    pub score_min: f64,
    pub score_max: f64,
    /// Probability of an extra, lower-scored near-duplicate proposal.
    pub duplicate_rate: f64,
    /// Objects showing less than this share of their shape produce no candidate.
    pub min_visible_fraction: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel {
            miss_prob: 0.0,
            fp_rate: 0.0,
            jitter: 0,
            score_min: 0.7,
            score_max: 0.95,
            duplicate_rate: 0.0,
            min_visible_fraction: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: u32,
    pub height: u32,
    pub frames: u32,
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub embedding: EmbeddingModel,
    #[serde(default)]
    pub detector: DetectorModel,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return bad("width, height and frames must be positive".into());
        }
        if self.objects.is_empty() {
            return bad("scene has no objects".into());
        }
        if self.objects.len() >= EMBED_DIM {
            return bad(format!("at most {} objects supported", EMBED_DIM - 1));
        }
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.id) {
                return bad(format!("duplicate object id {}", o.id));
            }
            if o.size[0] == 0 || o.size[1] == 0 {
                return bad(format!("object {} has zero size", o.id));
            }
            if o.size[0] > self.width || o.size[1] > self.height {
                return bad(format!(
                    "object {} ({}x{}) larger than frame ({}x{})",
                    o.id, o.size[0], o.size[1], self.width, self.height
                ));
            }
            if o.waypoints.is_empty() {
                return bad(format!("object {} has no waypoints", o.id));
            }
            if o.waypoints.windows(2).any(|p| p[0].frame >= p[1].frame) {
                return bad(format!("object {} waypoint frames must strictly increase", o.id));
            }
        }
        let d = &self.detector;
        for (name, p) in [
            ("miss_prob", d.miss_prob),
            ("duplicate_rate", d.duplicate_rate),
            ("min_visible_fraction", d.min_visible_fraction),
            ("score_min", d.score_min),
            ("score_max", d.score_max),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if d.score_min > d.score_max {
            return bad("score_min exceeds score_max".into());
        }
        if !(d.fp_rate >= 0.0 && d.fp_rate.is_finite()) {
            return bad(format!("fp_rate must be non-negative, got {}", d.fp_rate));
        }
        let e = &self.embedding;
        if !(e.centroid_spacing >= 0.0 && e.noise_sigma >= 0.0) {
            return bad("embedding spacing and noise must be non-negative".into());
        }
        Ok(())
    }
}
