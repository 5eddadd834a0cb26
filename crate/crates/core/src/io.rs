//! JSON-lines stream formats shared by the CLI and the simulator.
//!
//! * masks: `{"size": [height, width], "counts": [...]}` (column-major RLE)
//! * candidate stream: one frame per line,
//!   `{"frame", "width", "height", "candidates": [{"box", "score", "rle", "embedding"}], "flow"}`
//! * mask stream (ground truth, predictions, first-frame masks):
//!   `{"frame": int, "masks": {"<instance id>": RLE}}`; predictions also carry
//!   `"paths": {"<instance id>": "IOU" | "REID" | "FLOW"}`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cascade::{AssocPath, Candidate, FrameResult};
use crate::error::{Error, Result};
use crate::eval::EvalFrame;
use crate::maskcore::{BBox, BitMask};
use crate::reid::Embedding;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RleJson {
    /// `[height, width]`
    pub size: [u32; 2],
    pub counts: Vec<u32>,
}

impl From<&BitMask> for RleJson {
    fn from(m: &BitMask) -> Self {
        RleJson {
            size: [m.height(), m.width()],
            counts: m.counts().to_vec(),
        }
    }
}

impl RleJson {
    pub fn to_mask(&self) -> Result<BitMask> {
        BitMask::from_counts(self.size[1], self.size[0], &self.counts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateJson {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub score: f64,
    pub rle: RleJson,
    pub embedding: Embedding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateLine {
    pub frame: u64,
    pub width: u32,
    pub height: u32,
    pub candidates: Vec<CandidateJson>,
    /// Flow file for this frame, relative to the flow directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<String>,
}

impl CandidateLine {
    pub fn from_candidates(frame: u64, width: u32, height: u32, cands: &[Candidate], flow: Option<String>) -> Self {
        CandidateLine {
            frame,
            width,
            height,
            candidates: cands
                .iter()
                .map(|c| CandidateJson {
                    bbox: c.bbox,
                    score: c.score,
                    rle: RleJson::from(&c.mask),
                    embedding: c.embedding.clone(),
                })
                .collect(),
            flow,
        }
    }

    /// Decodes and validates the candidates. Masks whose size disagrees with
    /// the line's frame size are dimension errors.
    pub fn decode(&self) -> Result<Vec<Candidate>> {
        self.candidates
            .iter()
            .map(|c| {
                let mask = c.rle.to_mask()?;
                if mask.dims() != (self.width, self.height) {
                    return Err(Error::dims((self.width, self.height), mask.dims()));
                }
                let cand = Candidate {
                    bbox: c.bbox,
                    score: c.score,
                    mask,
                    embedding: c.embedding.clone(),
                };
                cand.validate()?;
                Ok(cand)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskLine {
    pub frame: u64,
    pub masks: BTreeMap<String, RleJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<BTreeMap<String, AssocPath>>,
}

impl MaskLine {
    pub fn from_masks(frame: u64, masks: &BTreeMap<u32, BitMask>) -> Self {
        MaskLine {
            frame,
            masks: masks.iter().map(|(id, m)| (id.to_string(), RleJson::from(m))).collect(),
            paths: None,
        }
    }

    pub fn from_result(r: &FrameResult) -> Self {
        MaskLine {
            frame: r.frame_id,
            masks: r
                .instances
                .iter()
                .map(|i| (i.id.to_string(), RleJson::from(&i.mask)))
                .collect(),
            paths: Some(r.instances.iter().map(|i| (i.id.to_string(), i.path)).collect()),
        }
    }

    pub fn decode(&self) -> Result<EvalFrame> {
        let mut masks = BTreeMap::new();
        let mut dims = None;
        for (k, rle) in &self.masks {
            let id: u32 = k
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("instance id {k:?} is not an integer")))?;
            let m = rle.to_mask()?;
            match dims {
                None => dims = Some(m.dims()),
                Some(d) if d != m.dims() => return Err(Error::dims(d, m.dims())),
                _ => {}
            }
            masks.insert(id, m);
        }
        Ok(EvalFrame {
            frame: self.frame,
            masks,
        })
    }
}

/// Iterates a JSON-lines stream, skipping blank lines and tagging parse
/// failures with their 1-based line number.
pub struct JsonLines<R, T> {
    reader: R,
    path: PathBuf,
    line_no: usize,
    buf: String,
    _marker: std::marker::PhantomData<T>,
}

impl<R: BufRead, T: DeserializeOwned> JsonLines<R, T> {
    pub fn new(reader: R, path: impl Into<PathBuf>) -> Self {
        JsonLines {
            reader,
            path: path.into(),
            line_no: 0,
            buf: String::new(),
            _marker: std::marker::PhantomData,
        }
    }

    pub fn line_no(&self) -> usize {
        self.line_no
    }

    pub fn parse_error(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line_no,
            msg: msg.into(),
        }
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for JsonLines<R, T> {
    type Item = Result<(usize, T)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line_no += 1;
            let line = self.buf.trim();
            if line.is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str(line)
                    .map(|v| (self.line_no, v))
                    .map_err(|e| self.parse_error(e.to_string())),
            );
        }
    }
}

pub fn write_json_line<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut w, value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Reads a whole mask stream into memory.
pub fn read_mask_stream(path: &Path) -> Result<Vec<EvalFrame>> {
    let f = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for item in JsonLines::<_, MaskLine>::new(std::io::BufReader::new(f), path) {
        let (line, ml) = item?;
        out.push(ml.decode().map_err(|e| match e {
            Error::DimensionMismatch { .. } => e,
            other => Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: other.to_string(),
            },
        })?);
    }
    Ok(out)
}
