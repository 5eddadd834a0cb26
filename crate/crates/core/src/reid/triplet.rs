//! Batch-hard triplet loss over squared Euclidean distances.
//!
//! Every sample that has at least one positive and one negative acts as an
//! anchor. Its positive is the farthest same-label sample and its negative the
//! nearest other-label sample (lowest index wins ties). The loss is
//! `sum_a max(0, |a - p|^2 - |a - n|^2 + alpha)`.

use crate::error::{Error, Result};

pub const DEFAULT_MARGIN: f64 = 1.0;

/// Feature vectors with parallel labels. All vectors share one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct TripletBatch {
    feats: Vec<Vec<f64>>,
    labels: Vec<u32>,
}

/// One mined triplet: sample indices plus the (unsquared) distances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinedTriplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
    pub d_ap: f64,
    pub d_an: f64,
}

impl MinedTriplet {
    /// Value inside the hinge.
    pub fn margin_term(&self, alpha: f64) -> f64 {
        self.d_ap * self.d_ap - self.d_an * self.d_an + alpha
    }
}

impl TripletBatch {
    pub fn new(feats: Vec<Vec<f64>>, labels: Vec<u32>) -> Result<Self> {
        if feats.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} features but {} labels",
                feats.len(),
                labels.len()
            )));
        }
        if let Some(first) = feats.first() {
            let dim = first.len();
            if feats.iter().any(|f| f.len() != dim) {
                return Err(Error::InvalidArgument("features differ in dimension".into()));
            }
            if feats.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite feature".into()));
            }
        }
        Ok(TripletBatch { feats, labels })
    }

    pub fn from_embeddings(embeddings: &[super::Embedding], labels: Vec<u32>) -> Result<Self> {
        let feats = embeddings
            .iter()
            .map(|e| e.values().iter().map(|&v| f64::from(v)).collect())
            .collect();
        Self::new(feats, labels)
    }

    pub fn feats(&self) -> &[Vec<f64>] {
        &self.feats
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.feats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feats.is_empty()
    }

    /// Hardest positive/negative per anchor. Errors if no anchor qualifies.
    pub fn mine(&self) -> Result<Vec<MinedTriplet>> {
        let n = self.feats.len();
        let mut out = Vec::new();
        for a in 0..n {
            let mut pos: Option<(usize, f64)> = None;
            let mut neg: Option<(usize, f64)> = None;
            for j in 0..n {
                if j == a {
                    continue;
                }
                let d = euclid(&self.feats[a], &self.feats[j]);
                if self.labels[j] == self.labels[a] {
                    if pos.map_or(true, |(_, best)| d > best) {
                        pos = Some((j, d));
                    }
                } else if neg.map_or(true, |(_, best)| d < best) {
                    neg = Some((j, d));
                }
            }
            if let (Some((p, d_ap)), Some((q, d_an))) = (pos, neg) {
                out.push(MinedTriplet {
                    anchor: a,
                    positive: p,
                    negative: q,
                    d_ap,
                    d_an,
                });
            }
        }
        if out.is_empty() {
            return Err(Error::NoValidAnchor);
        }
        Ok(out)
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn triplet_loss(batch: &TripletBatch, alpha: f64) -> Result<f64> {
    Ok(batch
        .mine()?
        .iter()
        .map(|t| t.margin_term(alpha).max(0.0))
        .sum())
}

/// Subgradient of [`triplet_loss`] with respect to every feature, holding
/// the mined positives and negatives fixed.
pub fn triplet_loss_grad(batch: &TripletBatch, alpha: f64) -> Result<Vec<Vec<f64>>> {
    let mined = batch.mine()?;
    let dim = batch.feats[0].len();
    let mut grad = vec![vec![0.0; dim]; batch.len()];
    for t in mined.iter().filter(|t| t.margin_term(alpha) > 0.0) {
        let (xa, xp, xn) = (
            &batch.feats[t.anchor],
            &batch.feats[t.positive],
            &batch.feats[t.negative],
        );
        for k in 0..dim {
            // d/dxa |xa-xp|^2 - |xa-xn|^2 = 2(xn - xp)
            grad[t.anchor][k] += 2.0 * (xn[k] - xp[k]);
            grad[t.positive][k] += -2.0 * (xa[k] - xp[k]);
            grad[t.negative][k] += 2.0 * (xa[k] - xn[k]);
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_batch() -> TripletBatch {
        // label 0 at (0,0),(1,0); label 1 at (0,1),(1,1): every d_ap = d_an = 1
        TripletBatch::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn four_point_configuration() {
        let b = square_batch();
        for t in b.mine().unwrap() {
            assert_eq!(t.d_ap, 1.0);
            assert_eq!(t.d_an, 1.0);
        }
        assert_eq!(triplet_loss(&b, 1.0).unwrap(), 4.0);
        assert_eq!(triplet_loss(&b, 0.25).unwrap(), 1.0);
    }

    #[test]
    fn inactive_hinge_contributes_nothing() {
        let b = TripletBatch::new(
            vec![vec![0.0], vec![0.0], vec![5.0], vec![5.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        assert_eq!(triplet_loss(&b, 1.0).unwrap(), 0.0);
        let g = triplet_loss_grad(&b, 1.0).unwrap();
        assert!(g.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn translation_invariant() {
        let b = square_batch();
        let shifted = TripletBatch::new(
            b.feats().iter().map(|f| f.iter().map(|v| v + 3.5).collect()).collect(),
            b.labels().to_vec(),
        )
        .unwrap();
        assert_eq!(triplet_loss(&b, 1.0).unwrap(), triplet_loss(&shifted, 1.0).unwrap());
    }

    #[test]
    fn mining_tie_takes_lowest_index() {
        let b = TripletBatch::new(
            vec![vec![0.0], vec![1.0], vec![-1.0], vec![2.0], vec![-2.0]],
            vec![0, 0, 0, 1, 1],
        )
        .unwrap();
        let t = b.mine().unwrap()[0];
        assert_eq!((t.positive, t.negative), (1, 3));
    }

    #[test]
    fn single_label_has_no_anchor() {
        let b = TripletBatch::new(vec![vec![0.0], vec![1.0]], vec![3, 3]).unwrap();
        assert!(matches!(triplet_loss(&b, 1.0), Err(Error::NoValidAnchor)));
        let b = TripletBatch::new(vec![vec![0.0], vec![1.0]], vec![3, 4]).unwrap();
        assert!(matches!(triplet_loss_grad(&b, 1.0), Err(Error::NoValidAnchor)));
    }

    #[test]
    fn alpha_shift_keeps_active_gradient() {
        let b = square_batch();
        assert_eq!(triplet_loss_grad(&b, 1.0).unwrap(), triplet_loss_grad(&b, 2.0).unwrap());
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(TripletBatch::new(vec![vec![0.0]], vec![]).is_err());
        assert!(TripletBatch::new(vec![vec![0.0], vec![0.0, 1.0]], vec![0, 1]).is_err());
    }
}
