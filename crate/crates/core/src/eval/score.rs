use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{contour_f, default_tolerance, jaccard};
use crate::error::{Error, Result};
use crate::maskcore::BitMask;

/// Per-frame instance masks, as read from prediction or ground-truth files.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalFrame {
    pub frame: u64,
    pub masks: BTreeMap<u32, BitMask>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub j_mean: f64,
    pub f_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceScore {
    pub per_instance: BTreeMap<u32, InstanceScore>,
    pub frames_scored: usize,
    pub j_mean: f64,
    pub f_mean: f64,
    pub g_mean: f64,
}

impl SequenceScore {
    fn from_instances(per_instance: BTreeMap<u32, InstanceScore>, frames_scored: usize) -> Self {
        let n = per_instance.len().max(1) as f64;
        let j_mean = per_instance.values().map(|s| s.j_mean).sum::<f64>() / n;
        let f_mean = per_instance.values().map(|s| s.f_mean).sum::<f64>() / n;
        SequenceScore {
            per_instance,
            frames_scored,
            j_mean,
            f_mean,
            g_mean: (j_mean + f_mean) / 2.0,
        }
    }
}

/// Scores aligned prediction/ground-truth streams. The first frame is given
/// to the tracker and is not scored. `tolerance` defaults to
/// [`default_tolerance`] for the frame size.
pub fn score_sequence<P, G>(pred: P, gt: G, tolerance: Option<u32>) -> Result<SequenceScore>
where
    P: IntoIterator<Item = EvalFrame>,
    G: IntoIterator<Item = EvalFrame>,
{
    let mut pred = pred.into_iter();
    let mut gt = gt.into_iter();
    let mut sums: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    let mut scored = 0usize;
    let mut index = 0usize;
    loop {
        let (p, g) = match (pred.next(), gt.next()) {
            (None, None) => break,
            (Some(p), Some(g)) => (p, g),
            (Some(p), None) => {
                return Err(Error::InstanceMismatch {
                    frame: p.frame,
                    detail: "prediction has more frames than ground truth".into(),
                })
            }
            (None, Some(g)) => {
                return Err(Error::InstanceMismatch {
                    frame: g.frame,
                    detail: "ground truth has more frames than prediction".into(),
                })
            }
        };
        if p.frame != g.frame {
            return Err(Error::InstanceMismatch {
                frame: g.frame,
                detail: format!("prediction frame {} aligned with ground-truth frame {}", p.frame, g.frame),
            });
        }
        if !p.masks.keys().eq(g.masks.keys()) {
            return Err(Error::InstanceMismatch {
                frame: g.frame,
                detail: format!(
                    "prediction ids {:?} vs ground-truth ids {:?}",
                    p.masks.keys().collect::<Vec<_>>(),
                    g.masks.keys().collect::<Vec<_>>()
                ),
            });
        }
        if index == 0 {
            for id in g.masks.keys() {
                sums.insert(*id, (0.0, 0.0));
            }
        } else if !sums.keys().eq(g.masks.keys()) {
            return Err(Error::InstanceMismatch {
                frame: g.frame,
                detail: "instance set changed mid-sequence".into(),
            });
        }
        if index > 0 {
            for (id, gm) in &g.masks {
                let pm = &p.masks[id];
                let tol = tolerance.unwrap_or_else(|| default_tolerance(gm.width(), gm.height()));
                let s = sums.get_mut(id).expect("ids checked");
                s.0 += jaccard(pm, gm)?;
                s.1 += contour_f(pm, gm, tol)?;
            }
            scored += 1;
        }
        index += 1;
    }
    if index == 0 {
        return Err(Error::InvalidArgument("no frames to score".into()));
    }
    if scored == 0 {
        return Err(Error::InvalidArgument("need at least two frames; the first is not scored".into()));
    }
    let per_instance = sums
        .into_iter()
        .map(|(id, (j, f))| {
            (
                id,
                InstanceScore {
                    j_mean: j / scored as f64,
                    f_mean: f / scored as f64,
                },
            )
        })
        .collect();
    Ok(SequenceScore::from_instances(per_instance, scored))
}

/// Unweighted mean over every instance of every sequence.
pub fn dataset_score(sequences: &[SequenceScore]) -> (f64, f64, f64) {
    let all: Vec<&InstanceScore> = sequences.iter().flat_map(|s| s.per_instance.values()).collect();
    if all.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = all.len() as f64;
    let j = all.iter().map(|s| s.j_mean).sum::<f64>() / n;
    let f = all.iter().map(|s| s.f_mean).sum::<f64>() / n;
    (j, f, (j + f) / 2.0)
}
