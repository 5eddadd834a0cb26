//! Independent dense-pixel oracles and random generators shared by the
//! integration suites.
#![allow(dead_code)]

use ovslink::maskcore::{BBox, BitMask, ScoredBox};
use ovslink::simulator::{DetectorModel, EmbeddingModel, ObjectSpec, SceneSpec, Shape, Waypoint};
use rand::Rng;

/// Row-major dense copy, decoded straight from the column-major counts.
pub fn dense(m: &BitMask) -> Vec<bool> {
    let (w, h) = (m.width() as usize, m.height() as usize);
    let mut out = vec![false; w * h];
    let mut k = 0usize;
    for (i, &run) in m.counts().iter().enumerate() {
        for _ in 0..run {
            if i % 2 == 1 {
                out[(k % h) * w + k / h] = true;
            }
            k += 1;
        }
    }
    assert_eq!(k, w * h);
    out
}

pub fn dense_iou(a: &[bool], b: &[bool]) -> f64 {
    assert_eq!(a.len(), b.len());
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// A mix of shapes that exercises long runs, single pixels, column
/// boundaries, empty and full masks.
pub fn random_mask(rng: &mut impl Rng, w: u32, h: u32) -> BitMask {
    let kind = rng.gen_range(0..10);
    match kind {
        0 => BitMask::empty(w, h).unwrap(),
        1 => BitMask::from_fn(w, h, |_, _| true).unwrap(),
        2 | 3 => {
            let p: f64 = rng.gen_range(0.02..0.98);
            let px: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(p)).collect();
            BitMask::from_fn(w, h, |x, y| px[(y * w + x) as usize]).unwrap()
        }
        _ => {
            let n = rng.gen_range(1..6);
            let rects: Vec<(u32, u32, u32, u32)> = (0..n)
                .map(|_| {
                    let x0 = rng.gen_range(0..w);
                    let y0 = rng.gen_range(0..h);
                    let x1 = rng.gen_range(x0 + 1..=w);
                    let y1 = rng.gen_range(y0 + 1..=h);
                    (x0, y0, x1, y1)
                })
                .collect();
            let ellipse = kind >= 8;
            BitMask::from_fn(w, h, |x, y| {
                rects.iter().any(|&(x0, y0, x1, y1)| {
                    if ellipse {
                        let cx = f64::from(x0 + x1) / 2.0;
                        let cy = f64::from(y0 + y1) / 2.0;
                        let rx = f64::from(x1 - x0) / 2.0;
                        let ry = f64::from(y1 - y0) / 2.0;
                        let u = (f64::from(x) + 0.5 - cx) / rx;
                        let v = (f64::from(y) + 0.5 - cy) / ry;
                        u * u + v * v <= 1.0
                    } else {
                        x >= x0 && x < x1 && y >= y0 && y < y1
                    }
                })
            })
            .unwrap()
        }
    }
}

/// Candidate boxes with coarse coordinates and scores so that ties and
/// exact threshold hits actually occur.
pub fn random_boxes(rng: &mut impl Rng, n: usize) -> Vec<ScoredBox> {
    (0..n)
        .map(|_| {
            let x0 = f64::from(rng.gen_range(0..40)) * 2.5;
            let y0 = f64::from(rng.gen_range(0..40)) * 2.5;
            let bw = f64::from(rng.gen_range(0..20)) * 2.5;
            let bh = f64::from(rng.gen_range(0..20)) * 2.5;
            let score = f64::from(rng.gen_range(0..21)) / 20.0;
            ScoredBox {
                bbox: BBox::new(x0, y0, x0 + bw, y0 + bh),
                score,
            }
        })
        .collect()
}

fn ref_box_iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let iy = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let aa = (a.x_max - a.x_min).max(0.0) * (a.y_max - a.y_min).max(0.0);
    let ab = (b.x_max - b.x_min).max(0.0) * (b.y_max - b.y_min).max(0.0);
    let u = aa + ab - ix * iy;
    if u <= 0.0 {
        0.0
    } else {
        ix * iy / u
    }
}

/// Textbook NMS: repeatedly take the best remaining box and delete every
/// remaining box overlapping it by more than the threshold.
pub fn nms_reference(boxes: &[ScoredBox], score_thresh: f64, iou_thresh: f64) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..boxes.len()).filter(|&i| boxes[i].score > score_thresh).collect();
    let mut keep = Vec::new();
    while !remaining.is_empty() {
        let mut best = 0;
        for k in 1..remaining.len() {
            let (i, j) = (remaining[k], remaining[best]);
            if boxes[i].score > boxes[j].score || (boxes[i].score == boxes[j].score && i < j) {
                best = k;
            }
        }
        let b = remaining.swap_remove(best);
        keep.push(b);
        remaining.retain(|&i| ref_box_iou(&boxes[i].bbox, &boxes[b].bbox) <= iou_thresh);
    }
    keep
}

/// Dense nearest-neighbour backward warp.
pub fn dense_warp(m: &BitMask, dx: &[f32], dy: &[f32]) -> Vec<bool> {
    let (w, h) = m.dims();
    let src = dense(m);
    let mut out = vec![false; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let sx = (f64::from(x) + f64::from(dx[i])).round();
            let sy = (f64::from(y) + f64::from(dy[i])).round();
            if sx >= 0.0 && sy >= 0.0 && sx < f64::from(w) && sy < f64::from(h) {
                out[i] = src[(sy as u32 * w + sx as u32) as usize];
            }
        }
    }
    out
}

fn wp(frame: u32, x: i32, y: i32) -> Waypoint {
    Waypoint { frame, x, y }
}

/// A small square hides behind a static wall for frames 10-19 exactly.
pub fn hidden_gap_scene() -> SceneSpec {
    SceneSpec {
        width: 120,
        height: 80,
        frames: 30,
        objects: vec![
            ObjectSpec {
                id: 1,
                shape: Shape::Rectangle,
                size: [40, 40],
                waypoints: vec![wp(0, 60, 20)],
                depth: 0,
            },
            ObjectSpec {
                id: 2,
                shape: Shape::Rectangle,
                size: [12, 12],
                waypoints: vec![wp(0, 10, 30), wp(9, 10, 30), wp(10, 70, 34), wp(19, 70, 34), wp(20, 10, 30)],
                depth: 1,
            },
        ],
        embedding: EmbeddingModel::default(),
        detector: DetectorModel::default(),
        seed: 3,
    }
}
