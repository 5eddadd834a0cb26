//! Segmentation quality: J (region IoU), F (boundary F-measure), their mean
//! G, sequence scoring and ablation sweeps.

mod ablation;
mod metrics;
mod score;

pub use ablation::{ablation_sweep, config_grid, evaluate, rows_to_csv, AblationRow, EvalSequence, GridPoint};
pub use metrics::{contour_f, default_tolerance, jaccard, CONTOUR_TOLERANCE_FRACTION};
pub use score::{dataset_score, score_sequence, EvalFrame, InstanceScore, SequenceScore};
