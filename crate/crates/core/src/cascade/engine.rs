use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::CascadeConfig;
use super::refine::{IdentityRefiner, MaskRefiner, RefineContext};
use crate::error::{Error, Result};
use crate::flow::{warp_mask, FlowField};
use crate::maskcore::{mask_iou, nms, BBox, BitMask, PixelRect, ScoredBox};
use crate::reid::{Embedding, Gallery};

pub type InstanceId = u32;

/// Allowed gap between a candidate's box and its mask's bounding rectangle.
pub const BOX_MASK_TOLERANCE_PX: f64 = 2.0;

/// One detector proposal for a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub bbox: BBox,
    pub score: f64,
    pub mask: BitMask,
    pub embedding: Embedding,
}

impl Candidate {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::InvalidArgument(format!("score {} outside [0, 1]", self.score)));
        }
        if !self.bbox.is_valid() {
            return Err(Error::InvalidArgument(format!("malformed box {:?}", self.bbox)));
        }
        if let Some(r) = self.mask.bbox() {
            let m = BBox::from(r);
            let t = BOX_MASK_TOLERANCE_PX;
            let off = [
                (m.x_min - self.bbox.x_min).abs(),
                (m.y_min - self.bbox.y_min).abs(),
                (m.x_max - self.bbox.x_max).abs(),
                (m.y_max - self.bbox.y_max).abs(),
            ];
            if off.iter().any(|&d| d > t) {
                return Err(Error::InvalidArgument(format!(
                    "box {:?} disagrees with mask extent {:?} by more than {t}px",
                    self.bbox, m
                )));
            }
        }
        Ok(())
    }
}

/// Which stage of the cascade produced an instance's mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssocPath {
    #[serde(rename = "IOU")]
    Iou,
    #[serde(rename = "REID")]
    Reid,
    #[serde(rename = "FLOW")]
    Flow,
}

impl fmt::Display for AssocPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssocPath::Iou => "IOU",
            AssocPath::Reid => "REID",
            AssocPath::Flow => "FLOW",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceResult {
    pub id: InstanceId,
    pub mask: BitMask,
    pub path: AssocPath,
    pub matched_candidate: Option<usize>,
    /// IoU for the IOU path, minimum gallery distance for REID, none for FLOW.
    pub match_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameResult {
    pub frame_id: u64,
    pub instances: Vec<InstanceResult>,
}

impl FrameResult {
    pub fn get(&self, id: InstanceId) -> Option<&InstanceResult> {
        self.instances.iter().find(|r| r.id == id)
    }
}

#[derive(Clone, Debug)]
pub struct InstanceState {
    pub id: InstanceId,
    pub last_mask: BitMask,
    pub gallery: Gallery,
    /// Consecutive frames resolved by the flow path.
    pub missing_streak: u32,
    pub alive: bool,
}

/// Counters kept by the engine across a sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStats {
    pub frames_processed: u64,
    pub candidates_seen: u64,
    pub max_candidates_per_frame: usize,
    pub iou_events: u64,
    pub reid_events: u64,
    pub flow_events: u64,
}

/// The one-pass association engine. Frames must arrive in strictly
/// increasing order and are never revisited.
pub struct CascadeEngine {
    config: CascadeConfig,
    dims: Option<(u32, u32)>,
    last_frame: Option<u64>,
    instances: Vec<InstanceState>,
    refiner: Box<dyn MaskRefiner>,
    stats: EngineStats,
}

impl fmt::Debug for CascadeEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CascadeEngine")
            .field("config", &self.config)
            .field("dims", &self.dims)
            .field("instances", &self.instances.len())
            .field("stats", &self.stats)
            .finish()
    }
}

// Per-frame view of a usable candidate.
#[derive(Clone, Copy)]
struct Slot {
    index: usize,
    rect: PixelRect,
}

impl CascadeEngine {
    pub fn new(config: CascadeConfig) -> Result<Self> {
        config.validate()?;
        Ok(CascadeEngine {
            config,
            dims: None,
            last_frame: None,
            instances: Vec::new(),
            refiner: Box::new(IdentityRefiner),
            stats: EngineStats::default(),
        })
    }

    pub fn config(&self) -> &CascadeConfig {
        &self.config
    }

    pub fn stats(&self) -> &EngineStats {
        &self.stats
    }

    pub fn instances(&self) -> &[InstanceState] {
        &self.instances
    }

    pub fn is_initialized(&self) -> bool {
        self.dims.is_some()
    }

    pub fn set_refiner(&mut self, refiner: Box<dyn MaskRefiner>) {
        self.refiner = refiner;
    }

    /// Approximate heap bytes held in per-instance state.
    pub fn state_footprint(&self) -> usize {
        self.instances
            .iter()
            .map(|s| s.last_mask.counts().len() * 4 + s.gallery.len() * crate::reid::EMBED_DIM * 4)
            .sum()
    }

    /// Seeds instances from first-frame masks. Each instance's gallery gets
    /// the embedding of its best-overlapping candidate when that IoU exceeds
    /// `rho_iou`; a candidate wanted by several instances goes to the one
    /// with the higher IoU (lower id on ties) and the others start empty.
    pub fn init(
        &mut self,
        frame_id: u64,
        first_masks: &BTreeMap<InstanceId, BitMask>,
        candidates: &[Candidate],
    ) -> Result<FrameResult> {
        let Some(first) = first_masks.values().next() else {
            return Err(Error::InvalidArgument("no instances to track".into()));
        };
        let dims = first.dims();
        for m in first_masks.values() {
            if m.dims() != dims {
                return Err(Error::dims(dims, m.dims()));
            }
        }
        for c in candidates {
            if c.mask.dims() != dims {
                return Err(Error::dims(dims, c.mask.dims()));
            }
        }
        let usable = self.usable_candidates(candidates);

        // best candidate per instance
        let mut best: BTreeMap<InstanceId, (usize, f64)> = BTreeMap::new();
        for (&id, m) in first_masks {
            let mut top: Option<(usize, f64)> = None;
            for s in &usable {
                let iou = mask_iou(m, &candidates[s.index].mask)?;
                if iou > self.config.rho_iou && top.map_or(true, |(_, b)| iou > b) {
                    top = Some((s.index, iou));
                }
            }
            if let Some(t) = top {
                best.insert(id, t);
            }
        }
        let mut owner: BTreeMap<usize, (InstanceId, f64)> = BTreeMap::new();
        for (&id, &(ci, iou)) in &best {
            match owner.get(&ci) {
                Some(&(_, held)) if held >= iou => {}
                _ => {
                    owner.insert(ci, (id, iou));
                }
            }
        }

        self.instances.clear();
        let mut out = Vec::with_capacity(first_masks.len());
        for (&id, m) in first_masks {
            let mut gallery = Gallery::new(id, self.config.gallery_capacity);
            let won = best
                .get(&id)
                .filter(|(ci, _)| owner.get(ci).map(|o| o.0) == Some(id))
                .copied();
            if let Some((ci, _)) = won {
                gallery.push(candidates[ci].embedding.clone());
            }
            self.instances.push(InstanceState {
                id,
                last_mask: m.clone(),
                gallery,
                missing_streak: 0,
                alive: true,
            });
            let path = if won.is_some() { AssocPath::Iou } else { AssocPath::Flow };
            self.count(path);
            out.push(InstanceResult {
                id,
                mask: m.clone(),
                path,
                matched_candidate: won.map(|w| w.0),
                match_value: won.map(|w| w.1),
            });
        }
        self.dims = Some(dims);
        self.last_frame = Some(frame_id);
        self.stats.frames_processed += 1;
        self.note_candidates(candidates.len());
        Ok(FrameResult {
            frame_id,
            instances: out,
        })
    }

    /// Associates one frame. `flow` is backward flow to the previous frame;
    /// `None` means identity.
    pub fn step(
        &mut self,
        frame_id: u64,
        candidates: &[Candidate],
        flow: Option<&FlowField>,
    ) -> Result<FrameResult> {
        let dims = self.dims.ok_or(Error::NotInitialized)?;
        if let Some(prev) = self.last_frame {
            if frame_id <= prev {
                return Err(Error::InvalidArgument(format!(
                    "frame {frame_id} arrived after frame {prev}; frames must be strictly increasing"
                )));
            }
        }
        if let Some(f) = flow {
            if f.dims() != dims {
                return Err(Error::dims(dims, f.dims()));
            }
        }
        for c in candidates {
            if c.mask.dims() != dims {
                return Err(Error::dims(dims, c.mask.dims()));
            }
        }

        let usable = self.usable_candidates(candidates);
        let mut claimed = vec![false; candidates.len()];
        let mut out = Vec::with_capacity(self.instances.len());
        let cfg = &self.config;

        for inst in self.instances.iter_mut() {
            let warped = match flow {
                Some(f) => warp_mask(&inst.last_mask, f)?,
                None => inst.last_mask.clone(),
            };
            let warped_rect = warped.bbox();

            // IOU path
            let mut iou_pick: Option<(usize, f64)> = None;
            if let Some(wr) = warped_rect {
                for s in usable.iter().filter(|s| !claimed[s.index]) {
                    if !wr.intersects(&s.rect) {
                        continue;
                    }
                    let iou = mask_iou(&warped, &candidates[s.index].mask)?;
                    if iou > cfg.rho_iou && iou_pick.map_or(true, |(_, b)| iou > b) {
                        iou_pick = Some((s.index, iou));
                    }
                }
            }

            let result = if let Some((ci, iou)) = iou_pick {
                inst.gallery.push(candidates[ci].embedding.clone());
                InstanceResult {
                    id: inst.id,
                    mask: candidates[ci].mask.clone(),
                    path: AssocPath::Iou,
                    matched_candidate: Some(ci),
                    match_value: Some(iou),
                }
            } else {
                // Re-ID path
                let mut reid_pick: Option<(usize, f64)> = None;
                if cfg.reid_path_enabled && !inst.gallery.is_empty() {
                    for s in usable.iter().filter(|s| !claimed[s.index]) {
                        let q = &candidates[s.index].embedding;
                        if let Some(d) = inst.gallery.match_score(q, cfg.rho_reid, cfg.quorum) {
                            if reid_pick.map_or(true, |(_, b)| d < b) {
                                reid_pick = Some((s.index, d));
                            }
                        }
                    }
                }
                if let Some((ci, d)) = reid_pick {
                    if cfg.append_on_reid {
                        inst.gallery.push(candidates[ci].embedding.clone());
                    }
                    InstanceResult {
                        id: inst.id,
                        mask: candidates[ci].mask.clone(),
                        path: AssocPath::Reid,
                        matched_candidate: Some(ci),
                        match_value: Some(d),
                    }
                } else {
                    // flow path
                    let bbox = warped_rect.map(BBox::from).unwrap_or(BBox::new(0.0, 0.0, 0.0, 0.0));
                    let ctx = RefineContext {
                        frame_id,
                        instance_id: inst.id,
                        width: dims.0,
                        height: dims.1,
                    };
                    let mask = self.refiner.refine(&warped, &bbox, &ctx)?;
                    if mask.dims() != dims {
                        return Err(Error::dims(dims, mask.dims()));
                    }
                    InstanceResult {
                        id: inst.id,
                        mask,
                        path: AssocPath::Flow,
                        matched_candidate: None,
                        match_value: None,
                    }
                }
            };

            if let Some(ci) = result.matched_candidate {
                claimed[ci] = true;
                inst.missing_streak = 0;
            } else {
                inst.missing_streak += 1;
            }
            inst.last_mask = result.mask.clone();
            out.push(result);
        }

        for r in &out {
            self.count(r.path);
        }
        self.last_frame = Some(frame_id);
        self.stats.frames_processed += 1;
        self.note_candidates(candidates.len());
        Ok(FrameResult {
            frame_id,
            instances: out,
        })
    }

    // NMS survivors with nonempty masks, in ascending candidate index.
    /// NMS survivors with nonempty masks, in input order. Empty masks are
    /// dropped first so they cannot suppress anything.
    fn usable_candidates(&self, candidates: &[Candidate]) -> Vec<Slot> {
        let slots: Vec<Slot> = candidates
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.mask.bbox().map(|rect| Slot { index: i, rect }))
            .collect();
        let boxes: Vec<ScoredBox> = slots
            .iter()
            .map(|s| ScoredBox {
                bbox: candidates[s.index].bbox,
                score: candidates[s.index].score,
            })
            .collect();
        let mut keep = nms(&boxes, self.config.score_thresh, self.config.nms_iou);
        keep.sort_unstable();
        keep.into_iter().map(|k| slots[k]).collect()
    }

    fn count(&mut self, path: AssocPath) {
        match path {
            AssocPath::Iou => self.stats.iou_events += 1,
            AssocPath::Reid => self.stats.reid_events += 1,
            AssocPath::Flow => self.stats.flow_events += 1,
        }
    }

    fn note_candidates(&mut self, n: usize) {
        self.stats.candidates_seen += n as u64;
        self.stats.max_candidates_per_frame = self.stats.max_candidates_per_frame.max(n);
    }
}

/// Creates an engine and associates the first frame.
pub fn init(
    first_masks: &BTreeMap<InstanceId, BitMask>,
    first_candidates: &[Candidate],
    config: CascadeConfig,
) -> Result<(CascadeEngine, FrameResult)> {
    let mut engine = CascadeEngine::new(config)?;
    let r = engine.init(0, first_masks, first_candidates)?;
    Ok((engine, r))
}

/// Input for one frame of a sequence.
#[derive(Clone, Debug, Default)]
pub struct SequenceFrame {
    pub candidates: Vec<Candidate>,
    pub flow: Option<FlowField>,
}

#[derive(Debug)]
pub struct SequenceRun {
    pub results: Vec<FrameResult>,
    /// Association wall-clock time per frame, microseconds.
    pub timings_us: Vec<f64>,
    pub stats: EngineStats,
}

/// Runs the cascade over frames in order. The first frame seeds the engine
/// with `init_masks`; frame ids are positions in the stream.
pub fn run_sequence<I>(init_masks: &BTreeMap<InstanceId, BitMask>, frames: I, config: CascadeConfig) -> Result<SequenceRun>
where
    I: IntoIterator,
    I::Item: std::borrow::Borrow<SequenceFrame>,
{
    run_sequence_with(CascadeEngine::new(config)?, init_masks, frames)
}

pub fn run_sequence_with<I>(
    mut engine: CascadeEngine,
    init_masks: &BTreeMap<InstanceId, BitMask>,
    frames: I,
) -> Result<SequenceRun>
where
    I: IntoIterator,
    I::Item: std::borrow::Borrow<SequenceFrame>,
{
    use std::borrow::Borrow;
    let mut results = Vec::new();
    let mut timings_us = Vec::new();
    for (i, frame) in frames.into_iter().enumerate() {
        let frame: &SequenceFrame = frame.borrow();
        let t0 = Instant::now();
        let r = if i == 0 {
            engine.init(0, init_masks, &frame.candidates)?
        } else {
            engine.step(i as u64, &frame.candidates, frame.flow.as_ref())?
        };
        timings_us.push(t0.elapsed().as_secs_f64() * 1e6);
        results.push(r);
    }
    if results.is_empty() {
        return Err(Error::InvalidArgument("sequence has no frames".into()));
    }
    Ok(SequenceRun {
        results,
        timings_us,
        stats: engine.stats.clone(),
    })
}
