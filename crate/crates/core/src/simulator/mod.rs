//! Deterministic synthetic scenes with exact ground truth, backward flow and
//! a noisy detector model.

mod presets;
mod render;
mod spec;

use std::collections::BTreeMap;

pub use presets::{preset, PRESETS};
pub use render::{jitter_mask, sub_rng, SimFrame, Simulation};
pub use spec::{DetectorModel, EmbeddingModel, ObjectSpec, SceneSpec, Shape, Waypoint};

use crate::cascade::SequenceFrame;
use crate::error::Result;
use crate::eval::{EvalFrame, EvalSequence};
use crate::maskcore::BitMask;

/// A fully rendered scene.
#[derive(Clone, Debug)]
pub struct SimSequence {
    pub spec: SceneSpec,
    pub frames: Vec<SimFrame>,
}

impl SimSequence {
    /// Ground-truth masks of the first frame, used to seed tracking.
    pub fn first_masks(&self) -> BTreeMap<u32, BitMask> {
        self.frames[0].gt.clone()
    }

    /// Candidate/flow inputs for the cascade.
    pub fn inputs(&self) -> Vec<SequenceFrame> {
        self.frames
            .iter()
            .map(|f| SequenceFrame {
                candidates: f.candidates.clone(),
                flow: f.flow.clone(),
            })
            .collect()
    }

    pub fn ground_truth(&self) -> Vec<EvalFrame> {
        self.frames
            .iter()
            .map(|f| EvalFrame {
                frame: f.frame_id,
                masks: f.gt.clone(),
            })
            .collect()
    }

    pub fn to_eval_sequence(&self, name: impl Into<String>) -> EvalSequence {
        EvalSequence {
            name: name.into(),
            first_masks: self.first_masks(),
            inputs: self.inputs(),
            ground_truth: self.ground_truth(),
        }
    }
}

/// Renders every frame of `spec`.
pub fn generate(spec: &SceneSpec) -> Result<SimSequence> {
    let sim = Simulation::new(spec.clone())?;
    let frames = sim.frames().collect::<Result<Vec<_>>>()?;
    Ok(SimSequence {
        spec: spec.clone(),
        frames,
    })
}
