use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::maskcore::{DEFAULT_NMS_IOU, DEFAULT_SCORE_THRESH};
use crate::reid::{DEFAULT_GALLERY_CAPACITY, DEFAULT_QUORUM, DEFAULT_RHO_REID};

pub const DEFAULT_RHO_IOU: f64 = 0.3;

/// Thresholds and switches for the association cascade.
#[derive(Clone, Debug, PartialEq)]
pub struct CascadeConfig {
    pub rho_reid: f64,
    pub rho_iou: f64,
    pub quorum: f64,
    pub score_thresh: f64,
    pub nms_iou: f64,
    pub gallery_capacity: usize,
    pub reid_path_enabled: bool,
    pub append_on_reid: bool,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            rho_reid: DEFAULT_RHO_REID,
            rho_iou: DEFAULT_RHO_IOU,
            quorum: DEFAULT_QUORUM,
            score_thresh: DEFAULT_SCORE_THRESH,
            nms_iou: DEFAULT_NMS_IOU,
            gallery_capacity: DEFAULT_GALLERY_CAPACITY,
            reid_path_enabled: true,
            append_on_reid: true,
        }
    }
}

const KEYS: [&str; 8] = [
    "rho_reid",
    "rho_iou",
    "quorum",
    "score_thresh",
    "nms_iou",
    "gallery_capacity",
    "reid_path_enabled",
    "append_on_reid",
];

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.rho_reid.is_finite() && self.rho_reid > 0.0) {
            return bad(format!("rho_reid must be positive, got {}", self.rho_reid));
        }
        if !(self.rho_iou > 0.0 && self.rho_iou < 1.0) {
            return bad(format!("rho_iou must lie in (0, 1), got {}", self.rho_iou));
        }
        if !(0.0..=1.0).contains(&self.quorum) {
            return bad(format!("quorum must lie in [0, 1], got {}", self.quorum));
        }
        if !(0.0..1.0).contains(&self.score_thresh) {
            return bad(format!("score_thresh must lie in [0, 1), got {}", self.score_thresh));
        }
        if !(self.nms_iou > 0.0 && self.nms_iou <= 1.0) {
            return bad(format!("nms_iou must lie in (0, 1], got {}", self.nms_iou));
        }
        if self.gallery_capacity == 0 {
            return bad("gallery_capacity must be at least 1".into());
        }
        Ok(())
    }

    /// Sets one field from its textual `key=value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("{key}: not a number: {v:?}")))
        };
        let flag = |v: &str| -> Result<bool> {
            match v {
                "true" | "on" | "1" => Ok(true),
                "false" | "off" | "0" => Ok(false),
                _ => Err(Error::InvalidArgument(format!("{key}: not a boolean: {v:?}"))),
            }
        };
        match key {
            "rho_reid" => self.rho_reid = num(value)?,
            "rho_iou" => self.rho_iou = num(value)?,
            "quorum" => self.quorum = num(value)?,
            "score_thresh" => self.score_thresh = num(value)?,
            "nms_iou" => self.nms_iou = num(value)?,
            "gallery_capacity" => {
                self.gallery_capacity = value
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("{key}: not an integer: {value:?}")))?
            }
            "reid_path_enabled" => self.reid_path_enabled = flag(value)?,
            "append_on_reid" => self.append_on_reid = flag(value)?,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key {key:?} (expected one of {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses flat `key=value` text. Blank lines and `#` comments are skipped;
    /// unknown keys are errors. Unset keys keep their defaults.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = CascadeConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("line {}: expected key=value, got {raw:?}", n + 1))
            })?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rho_reid={}", self.rho_reid);
        let _ = writeln!(s, "rho_iou={}", self.rho_iou);
        let _ = writeln!(s, "quorum={}", self.quorum);
        let _ = writeln!(s, "score_thresh={}", self.score_thresh);
        let _ = writeln!(s, "nms_iou={}", self.nms_iou);
        let _ = writeln!(s, "gallery_capacity={}", self.gallery_capacity);
        let _ = writeln!(s, "reid_path_enabled={}", self.reid_path_enabled);
        let _ = writeln!(s, "append_on_reid={}", self.append_on_reid);
        s
    }
}
