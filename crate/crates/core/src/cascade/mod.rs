//! The one-pass association cascade: IOU path, then Re-ID path, then flow path.

mod config;
mod engine;
mod refine;

pub use config::{CascadeConfig, DEFAULT_RHO_IOU};
pub use engine::{
    init, run_sequence, run_sequence_with, AssocPath, Candidate, CascadeEngine, EngineStats, FrameResult,
    InstanceId, InstanceResult, InstanceState, SequenceFrame, SequenceRun, BOX_MASK_TOLERANCE_PX,
};
pub use refine::{EmptyRefiner, IdentityRefiner, MaskRefiner, MorphCloseRefiner, RefineContext};
