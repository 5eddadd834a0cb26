use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EMBED_DIM: usize = 128;

/// Fixed-size appearance feature attached to each candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct Embedding(Vec<f32>);

impl TryFrom<Vec<f32>> for Embedding {
    type Error = Error;

    fn try_from(values: Vec<f32>) -> Result<Self> {
        if values.len() != EMBED_DIM {
            return Err(Error::InvalidArgument(format!(
                "embedding must have {EMBED_DIM} entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("embedding has non-finite entries".into()));
        }
        Ok(Embedding(values))
    }
}

impl From<Embedding> for Vec<f32> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

impl Embedding {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        Self::try_from(values)
    }

    pub fn zeros() -> Self {
        Embedding(vec![0.0; EMBED_DIM])
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }
}

/// Euclidean distance, accumulated in f64.
pub fn distance(a: &Embedding, b: &Embedding) -> f64 {
    a.0.iter()
        .zip(&b.0)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Writes embeddings as consecutive records of 128 little-endian f32.
pub fn write_embeddings<W: Write>(mut w: W, embeddings: &[Embedding]) -> Result<()> {
    let mut buf = Vec::with_capacity(EMBED_DIM * 4);
    for e in embeddings {
        buf.clear();
        for v in &e.0 {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_embeddings<R: Read>(mut r: R) -> Result<Vec<Embedding>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % (EMBED_DIM * 4) != 0 {
        return Err(Error::InvalidArgument(format!(
            "embedding stream length {} is not a multiple of {}",
            bytes.len(),
            EMBED_DIM * 4
        )));
    }
    bytes
        .chunks_exact(EMBED_DIM * 4)
        .map(|rec| {
            Embedding::new(
                rec.chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            )
        })
        .collect()
}
