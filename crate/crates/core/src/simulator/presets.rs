//! Canonical scenes.
//!
//! * `static`: three objects that never move, noiseless detector.
//! * `crossing`: a large near object and a small far object swap sides; the
//!   small one is fully hidden for several frames mid-sequence.
//! * `exit-reenter`: one object leaves through the right edge and comes back
//!   from the left, next to a static distractor.
//! * `crowd`: ten wandering objects on a 854x480 frame with clutter false
//!   positives, misses, jitter and near-duplicate proposals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::{DetectorModel, EmbeddingModel, ObjectSpec, SceneSpec, Shape, Waypoint};
use crate::error::{Error, Result};

pub const PRESETS: [&str; 4] = ["crossing", "exit-reenter", "crowd", "static"];

fn wp(frame: u32, x: i32, y: i32) -> Waypoint {
    Waypoint { frame, x, y }
}

fn object(id: u32, shape: Shape, size: [u32; 2], depth: i32, waypoints: Vec<Waypoint>) -> ObjectSpec {
    ObjectSpec {
        id,
        shape,
        size,
        waypoints,
        depth,
    }
}

fn noisy_detector() -> DetectorModel {
    DetectorModel {
        fp_rate: 0.1,
        jitter: 1,
        ..DetectorModel::default()
    }
}

pub fn preset(name: &str) -> Result<SceneSpec> {
    let spec = match name {
        "static" => SceneSpec {
            width: 160,
            height: 120,
            frames: 20,
            objects: vec![
                object(1, Shape::Rectangle, [30, 24], 0, vec![wp(0, 10, 10)]),
                object(2, Shape::Ellipse, [28, 28], 1, vec![wp(0, 70, 40)]),
                object(3, Shape::Rectangle, [20, 40], 2, vec![wp(0, 120, 60)]),
            ],
            embedding: EmbeddingModel::default(),
            detector: DetectorModel::default(),
            seed: 0,
        },
        "crossing" => SceneSpec {
            width: 160,
            height: 96,
            frames: 60,
            objects: vec![
                object(1, Shape::Rectangle, [40, 40], 0, vec![wp(0, 8, 28), wp(59, 96, 28)]),
                object(2, Shape::Ellipse, [14, 14], 1, vec![wp(0, 138, 41), wp(59, 50, 41)]),
            ],
            embedding: EmbeddingModel::default(),
            detector: noisy_detector(),
            seed: 0,
        },
        "exit-reenter" => SceneSpec {
            width: 160,
            height: 96,
            frames: 60,
            objects: vec![
                object(
                    1,
                    Shape::Rectangle,
                    [20, 20],
                    0,
                    vec![wp(0, 60, 38), wp(20, 165, 38), wp(30, 165, 38), wp(31, -30, 20), wp(59, 80, 20)],
                ),
                object(2, Shape::Ellipse, [24, 24], 1, vec![wp(0, 30, 62)]),
            ],
            embedding: EmbeddingModel::default(),
            detector: noisy_detector(),
            seed: 0,
        },
        "crowd" => crowd(),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown preset {name:?} (expected one of {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(spec)
}

fn crowd() -> SceneSpec {
    let (width, height, frames) = (854u32, 480u32, 100u32);
    // layout is part of the preset, independent of the noise seed
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c0d);
    let objects = (0..10u32)
        .map(|i| {
            let w = rng.gen_range(40..=90u32);
            let h = rng.gen_range(40..=90u32);
            let shape = if i % 2 == 0 { Shape::Rectangle } else { Shape::Ellipse };
            let waypoints = (0..=4u32)
                .map(|k| {
                    wp(
                        k * 25 - u32::from(k == 4),
                        rng.gen_range(0..(width - w) as i32),
                        rng.gen_range(0..(height - h) as i32),
                    )
                })
                .collect();
            object(i + 1, shape, [w, h], i as i32, waypoints)
        })
        .collect();
    SceneSpec {
        width,
        height,
        frames,
        objects,
        embedding: EmbeddingModel::default(),
        detector: DetectorModel {
            miss_prob: 0.05,
            fp_rate: 0.2,
            jitter: 2,
            duplicate_rate: 1.0,
            ..DetectorModel::default()
        },
        seed: 0,
    }
}
