//! C ABI over the `ovslink` association engine.
//!
//! Objects cross the boundary as opaque pointers created by `ovs_*_new` /
//! `ovs_*_from_*` and released with the matching `ovs_*_free`. Every call
//! returns an `OvsStatus`; on failure a description is available from
//! `ovs_last_error` on the same thread until the next failing call.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ovslink::cascade::{AssocPath, Candidate, CascadeConfig, CascadeEngine, FrameResult};
use ovslink::flow::{warp_mask, FlowField};
use ovslink::maskcore::{mask_iou, BBox, BitMask};
use ovslink::reid::{Embedding, EMBED_DIM};
use ovslink::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OvsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidMask = 4,
    NotInitialized = 5,
    InstanceMismatch = 6,
    Flow = 7,
    Io = 8,
    BufferTooSmall = 9,
    OutOfRange = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OvsPath {
    Iou = 0,
    Reid = 1,
    Flow = 2,
}

/// Cascade thresholds; start from `ovs_config_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OvsConfig {
    pub rho_reid: f64,
    pub rho_iou: f64,
    pub quorum: f64,
    pub score_thresh: f64,
    pub nms_iou: f64,
    pub gallery_capacity: u32,
    pub reid_path_enabled: bool,
    pub append_on_reid: bool,
}

/// One tracked instance in a frame result.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OvsInstance {
    pub id: u32,
    pub path: OvsPath,
    /// Index of the adopted candidate, -1 on the flow path.
    pub matched_candidate: i64,
    /// IoU or Re-ID distance of the match; NaN on the flow path.
    pub match_value: f64,
    pub area: u64,
}

pub struct OvsMask(BitMask);
pub struct OvsFlow(FlowField);

/// Candidates (and optional flow) for one frame.
#[derive(Default)]
pub struct OvsFrame {
    candidates: Vec<Candidate>,
    flow: Option<FlowField>,
}

pub struct OvsEngine {
    engine: CascadeEngine,
    first_masks: BTreeMap<u32, BitMask>,
}

pub struct OvsResult(FrameResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(OvsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let s = match &e {
            Error::DimensionMismatch { .. } => OvsStatus::DimensionMismatch,
            Error::InvalidMask(_) => OvsStatus::InvalidMask,
            Error::NotInitialized => OvsStatus::NotInitialized,
            Error::InstanceMismatch { .. } => OvsStatus::InstanceMismatch,
            Error::Flow(_) => OvsStatus::Flow,
            Error::Io(_) => OvsStatus::Io,
            _ => OvsStatus::InvalidArgument,
        };
        Fail(s, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(OvsStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OvsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OvsStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            OvsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the most recent failure on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ovs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Length of the embedding vectors the engine expects.
#[no_mangle]
pub extern "C" fn ovs_embedding_dim() -> usize {
    EMBED_DIM
}

// ---- masks ----

/// Builds a mask from column-major run lengths (background run first).
#[no_mangle]
pub unsafe extern "C" fn ovs_mask_from_rle(
    width: u32,
    height: u32,
    counts: *const u32,
    len: usize,
    out: *mut *mut OvsMask,
) -> OvsStatus {
    guard(|| {
        let counts = slice(counts, len, "counts")?;
        put(out, OvsMask(BitMask::from_counts(width, height, counts)?))
    })
}

/// Builds a mask from `width * height` row-major bytes; nonzero is foreground.
#[no_mangle]
pub unsafe extern "C" fn ovs_mask_from_dense(
    width: u32,
    height: u32,
    pixels: *const u8,
    out: *mut *mut OvsMask,
) -> OvsStatus {
    guard(|| {
        let n = width as usize * height as usize;
        let px = slice(pixels, n, "pixels")?;
        put(out, OvsMask(BitMask::from_row_major(width, height, px)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ovs_mask_free(mask: *mut OvsMask) {
    release(mask)
}

#[no_mangle]
pub unsafe extern "C" fn ovs_mask_dims(mask: *const OvsMask, width: *mut u32, height: *mut u32) -> OvsStatus {
    guard(|| {
        let m = deref(mask, "mask")?;
        *deref_mut(width, "width")? = m.0.width();
        *deref_mut(height, "height")? = m.0.height();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ovs_mask_area(mask: *const OvsMask, area: *mut u64) -> OvsStatus {
    guard(|| {
        *deref_mut(area, "area")? = deref(mask, "mask")?.0.area();
        Ok(())
    })
}

/// Copies the run lengths into `buf`. `len` receives the number of runs; if
/// `cap` is smaller, nothing is copied and `BufferTooSmall` is returned, so
/// a call with `cap == 0` queries the size.
#[no_mangle]
pub unsafe extern "C" fn ovs_mask_rle(mask: *const OvsMask, buf: *mut u32, cap: usize, len: *mut usize) -> OvsStatus {
    guard(|| {
        let counts = deref(mask, "mask")?.0.counts();
        *deref_mut(len, "len")? = counts.len();
        if cap < counts.len() {
            return Err(Fail(
                OvsStatus::BufferTooSmall,
                format!("need {} entries, have {cap}", counts.len()),
            ));
        }
        if !counts.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(counts.as_ptr(), buf, counts.len());
        }
        Ok(())
    })
}

/// Writes `width * height` row-major bytes (0 or 1) into `buf`.
#[no_mangle]
pub unsafe extern "C" fn ovs_mask_to_dense(mask: *const OvsMask, buf: *mut u8, cap: usize) -> OvsStatus {
    guard(|| {
        let m = &deref(mask, "mask")?.0;
        let dense = m.to_row_major();
        if cap < dense.len() {
            return Err(Fail(
                OvsStatus::BufferTooSmall,
                format!("need {} bytes, have {cap}", dense.len()),
            ));
        }
        if !dense.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            let out = std::slice::from_raw_parts_mut(buf, dense.len());
            for (o, v) in out.iter_mut().zip(dense) {
                *o = u8::from(v);
            }
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ovs_mask_iou(a: *const OvsMask, b: *const OvsMask, iou: *mut f64) -> OvsStatus {
    guard(|| {
        *deref_mut(iou, "iou")? = mask_iou(&deref(a, "a")?.0, &deref(b, "b")?.0)?;
        Ok(())
    })
}

// ---- flow ----

/// Backward flow from row-major `dx`/`dy` planes of `width * height` floats.
#[no_mangle]
pub unsafe extern "C" fn ovs_flow_new(
    width: u32,
    height: u32,
    dx: *const f32,
    dy: *const f32,
    out: *mut *mut OvsFlow,
) -> OvsStatus {
    guard(|| {
        let n = width as usize * height as usize;
        let dx = slice(dx, n, "dx")?.to_vec();
        let dy = slice(dy, n, "dy")?.to_vec();
        put(out, OvsFlow(FlowField::new(width, height, dx, dy)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ovs_flow_free(flow: *mut OvsFlow) {
    release(flow)
}

/// Warps a previous-frame mask into the current frame.
#[no_mangle]
pub unsafe extern "C" fn ovs_flow_warp(flow: *const OvsFlow, mask: *const OvsMask, out: *mut *mut OvsMask) -> OvsStatus {
    guard(|| {
        let warped = warp_mask(&deref(mask, "mask")?.0, &deref(flow, "flow")?.0)?;
        put(out, OvsMask(warped))
    })
}

// ---- frames ----

#[no_mangle]
pub unsafe extern "C" fn ovs_frame_new(out: *mut *mut OvsFrame) -> OvsStatus {
    guard(|| put(out, OvsFrame::default()))
}

#[no_mangle]
pub unsafe extern "C" fn ovs_frame_free(frame: *mut OvsFrame) {
    release(frame)
}

/// Removes all candidates and the flow so the frame can be reused.
#[no_mangle]
pub unsafe extern "C" fn ovs_frame_clear(frame: *mut OvsFrame) -> OvsStatus {
    guard(|| {
        *deref_mut(frame, "frame")? = OvsFrame::default();
        Ok(())
    })
}

/// Appends a candidate. `bbox` is `[x_min, y_min, x_max, y_max]`; the mask
/// and embedding are copied.
#[no_mangle]
pub unsafe extern "C" fn ovs_frame_add_candidate(
    frame: *mut OvsFrame,
    bbox: *const f64,
    score: f64,
    mask: *const OvsMask,
    embedding: *const f32,
    embedding_len: usize,
) -> OvsStatus {
    guard(|| {
        let frame = deref_mut(frame, "frame")?;
        let b = slice(bbox, 4, "bbox")?;
        let emb = slice(embedding, embedding_len, "embedding")?;
        let cand = Candidate {
            bbox: BBox::new(b[0], b[1], b[2], b[3]),
            score,
            mask: deref(mask, "mask")?.0.clone(),
            embedding: Embedding::new(emb.to_vec())?,
        };
        cand.validate()?;
        frame.candidates.push(cand);
        Ok(())
    })
}

/// Attaches (a copy of) backward flow to the previous frame; null resets to
/// identity.
#[no_mangle]
pub unsafe extern "C" fn ovs_frame_set_flow(frame: *mut OvsFrame, flow: *const OvsFlow) -> OvsStatus {
    guard(|| {
        let frame = deref_mut(frame, "frame")?;
        frame.flow = flow.as_ref().map(|f| f.0.clone());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ovs_frame_len(frame: *const OvsFrame, len: *mut usize) -> OvsStatus {
    guard(|| {
        *deref_mut(len, "len")? = deref(frame, "frame")?.candidates.len();
        Ok(())
    })
}

// ---- engine ----

#[no_mangle]
pub unsafe extern "C" fn ovs_config_default(out: *mut OvsConfig) -> OvsStatus {
    guard(|| {
        let c = CascadeConfig::default();
        *deref_mut(out, "config")? = OvsConfig {
            rho_reid: c.rho_reid,
            rho_iou: c.rho_iou,
            quorum: c.quorum,
            score_thresh: c.score_thresh,
            nms_iou: c.nms_iou,
            gallery_capacity: c.gallery_capacity as u32,
            reid_path_enabled: c.reid_path_enabled,
            append_on_reid: c.append_on_reid,
        };
        Ok(())
    })
}

/// Creates an engine; `config` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn ovs_engine_new(config: *const OvsConfig, out: *mut *mut OvsEngine) -> OvsStatus {
    guard(|| {
        let cfg = match config.as_ref() {
            None => CascadeConfig::default(),
            Some(c) => CascadeConfig {
                rho_reid: c.rho_reid,
                rho_iou: c.rho_iou,
                quorum: c.quorum,
                score_thresh: c.score_thresh,
                nms_iou: c.nms_iou,
                gallery_capacity: c.gallery_capacity as usize,
                reid_path_enabled: c.reid_path_enabled,
                append_on_reid: c.append_on_reid,
            },
        };
        put(
            out,
            OvsEngine {
                engine: CascadeEngine::new(cfg)?,
                first_masks: BTreeMap::new(),
            },
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn ovs_engine_free(engine: *mut OvsEngine) {
    release(engine)
}

/// Registers an instance's first-frame mask before `ovs_engine_init`.
#[no_mangle]
pub unsafe extern "C" fn ovs_engine_add_instance(engine: *mut OvsEngine, id: u32, mask: *const OvsMask) -> OvsStatus {
    guard(|| {
        let e = deref_mut(engine, "engine")?;
        if e.engine.is_initialized() {
            return Err(Fail(OvsStatus::InvalidArgument, "engine already initialized".into()));
        }
        e.first_masks.insert(id, deref(mask, "mask")?.0.clone());
        Ok(())
    })
}

/// Associates the first frame using the registered instances.
#[no_mangle]
pub unsafe extern "C" fn ovs_engine_init(
    engine: *mut OvsEngine,
    frame_id: u64,
    frame: *const OvsFrame,
    out: *mut *mut OvsResult,
) -> OvsStatus {
    guard(|| {
        let e = deref_mut(engine, "engine")?;
        let f = deref(frame, "frame")?;
        let r = e.engine.init(frame_id, &e.first_masks, &f.candidates)?;
        put(out, OvsResult(r))
    })
}

/// Associates the next frame. Frame ids must increase.
#[no_mangle]
pub unsafe extern "C" fn ovs_engine_step(
    engine: *mut OvsEngine,
    frame_id: u64,
    frame: *const OvsFrame,
    out: *mut *mut OvsResult,
) -> OvsStatus {
    guard(|| {
        let e = deref_mut(engine, "engine")?;
        let f = deref(frame, "frame")?;
        let r = e.engine.step(frame_id, &f.candidates, f.flow.as_ref())?;
        put(out, OvsResult(r))
    })
}

// ---- results ----

#[no_mangle]
pub unsafe extern "C" fn ovs_result_free(result: *mut OvsResult) {
    release(result)
}

#[no_mangle]
pub unsafe extern "C" fn ovs_result_len(result: *const OvsResult, len: *mut usize) -> OvsStatus {
    guard(|| {
        *deref_mut(len, "len")? = deref(result, "result")?.0.instances.len();
        Ok(())
    })
}

fn instance_at(r: &OvsResult, index: usize) -> Result<&ovslink::cascade::InstanceResult, Fail> {
    r.0.instances.get(index).ok_or_else(|| {
        Fail(
            OvsStatus::OutOfRange,
            format!("index {index} out of range ({} instances)", r.0.instances.len()),
        )
    })
}

/// Instances are ordered by ascending id.
#[no_mangle]
pub unsafe extern "C" fn ovs_result_instance(result: *const OvsResult, index: usize, out: *mut OvsInstance) -> OvsStatus {
    guard(|| {
        let inst = instance_at(deref(result, "result")?, index)?;
        *deref_mut(out, "out")? = OvsInstance {
            id: inst.id,
            path: match inst.path {
                AssocPath::Iou => OvsPath::Iou,
                AssocPath::Reid => OvsPath::Reid,
                AssocPath::Flow => OvsPath::Flow,
            },
            matched_candidate: inst.matched_candidate.map_or(-1, |i| i as i64),
            match_value: inst.match_value.unwrap_or(f64::NAN),
            area: inst.mask.area(),
        };
        Ok(())
    })
}

/// Copies an instance's mask into a new mask handle.
#[no_mangle]
pub unsafe extern "C" fn ovs_result_mask(result: *const OvsResult, index: usize, out: *mut *mut OvsMask) -> OvsStatus {
    guard(|| {
        let inst = instance_at(deref(result, "result")?, index)?;
        put(out, OvsMask(inst.mask.clone()))
    })
}
