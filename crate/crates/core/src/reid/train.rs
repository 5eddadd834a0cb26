//! Desk-scale embedding trainer: one linear projection optimised with the
//! batch-hard triplet loss by seeded mini-batch gradient descent.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::triplet::{triplet_loss, triplet_loss_grad, TripletBatch, DEFAULT_MARGIN};
use super::EMBED_DIM;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub out_dim: usize,
    pub steps: usize,
    pub learn_rate: f64,
    pub batch_size: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            out_dim: EMBED_DIM,
            steps: 200,
            learn_rate: 1e-3,
            batch_size: 32,
            alpha: DEFAULT_MARGIN,
            seed: 0,
        }
    }
}

/// Row-major `rows x cols` matrix mapping raw features to embeddings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Projection {
    /// Scaled-uniform init in `[-1/sqrt(cols), 1/sqrt(cols)]`.
    pub fn init(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (cols as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
        Projection { rows, cols, data }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutput {
    pub projection: Projection,
    pub initial: Projection,
    /// Mini-batch loss measured before each update.
    pub loss_history: Vec<f64>,
}

/// Loss of the whole sample set under a projection.
pub fn dataset_loss(samples: &[(Vec<f64>, u32)], p: &Projection, alpha: f64) -> Result<f64> {
    let batch = TripletBatch::new(
        samples.iter().map(|(x, _)| p.apply(x)).collect(),
        samples.iter().map(|(_, l)| *l).collect(),
    )?;
    triplet_loss(&batch, alpha)
}

pub fn train_projection(samples: &[(Vec<f64>, u32)], cfg: &TrainConfig) -> Result<TrainOutput> {
    let Some((first, _)) = samples.first() else {
        return Err(Error::InvalidArgument("no training samples".into()));
    };
    let in_dim = first.len();
    if in_dim == 0 || samples.iter().any(|(x, _)| x.len() != in_dim) {
        return Err(Error::InvalidArgument("raw features must share a nonzero dimension".into()));
    }
    let mut by_label: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, (_, l)) in samples.iter().enumerate() {
        by_label.entry(*l).or_default().push(i);
    }
    if by_label.len() < 2 {
        return Err(Error::InvalidArgument("training needs at least two labels".into()));
    }
    if cfg.batch_size < 4 || cfg.out_dim == 0 {
        return Err(Error::InvalidArgument("batch_size must be >= 4 and out_dim > 0".into()));
    }
    let pools: Vec<&Vec<usize>> = by_label.values().collect();
    let per_batch_labels = pools.len().min((cfg.batch_size / 2).max(2));
    let per_label = (cfg.batch_size / per_batch_labels).max(2);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial = Projection::init(cfg.out_dim, in_dim, &mut rng);
    let mut w = initial.clone();
    let mut history = Vec::with_capacity(cfg.steps);

    for _ in 0..cfg.steps {
        let mut picks = Vec::with_capacity(per_batch_labels * per_label);
        for li in index::sample(&mut rng, pools.len(), per_batch_labels).into_iter() {
            let pool = pools[li];
            for _ in 0..per_label {
                picks.push(pool[rng.gen_range(0..pool.len())]);
            }
        }
        let batch = TripletBatch::new(
            picks.iter().map(|&i| w.apply(&samples[i].0)).collect(),
            picks.iter().map(|&i| samples[i].1).collect(),
        )?;
        history.push(triplet_loss(&batch, cfg.alpha)?);
        let grads = triplet_loss_grad(&batch, cfg.alpha)?;
        // dL/dW = sum_i g_i x_i^T
        for (g, &i) in grads.iter().zip(&picks) {
            let x = &samples[i].0;
            for (r, gr) in g.iter().enumerate() {
                if *gr == 0.0 {
                    continue;
                }
                let row = &mut w.data[r * in_dim..(r + 1) * in_dim];
                for (wv, xv) in row.iter_mut().zip(x) {
                    *wv -= cfg.learn_rate * gr * xv;
                }
            }
        }
    }
    Ok(TrainOutput {
        projection: w,
        initial,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn two_clusters(n: usize, seed: u64) -> Vec<(Vec<f64>, u32)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.6).unwrap();
        (0..n)
            .map(|i| {
                let label = (i % 2) as u32;
                let center = if label == 0 { 1.0 } else { -1.0 };
                let x = (0..8).map(|_| center * 0.5 + noise.sample(&mut rng)).collect();
                (x, label)
            })
            .collect()
    }

    #[test]
    fn zero_rate_keeps_init() {
        let s = two_clusters(40, 1);
        let cfg = TrainConfig { learn_rate: 0.0, steps: 5, out_dim: 16, ..Default::default() };
        let out = train_projection(&s, &cfg).unwrap();
        assert_eq!(out.projection, out.initial);
        assert_eq!(out.loss_history.len(), 5);
    }

    #[test]
    fn training_lowers_loss() {
        let s = two_clusters(60, 2);
        let cfg = TrainConfig { steps: 200, learn_rate: 2e-3, batch_size: 16, seed: 9, ..Default::default() };
        let out = train_projection(&s, &cfg).unwrap();
        let before = dataset_loss(&s, &out.initial, cfg.alpha).unwrap();
        let after = dataset_loss(&s, &out.projection, cfg.alpha).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn deterministic_given_seed() {
        let s = two_clusters(30, 3);
        let cfg = TrainConfig { steps: 20, out_dim: 8, seed: 5, ..Default::default() };
        let a = train_projection(&s, &cfg).unwrap();
        let b = train_projection(&s, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.loss_history.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.loss_history.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_label_rejected() {
        let s: Vec<_> = (0..5).map(|i| (vec![i as f64], 1u32)).collect();
        assert!(train_projection(&s, &TrainConfig::default()).is_err());
    }

    #[test]
    fn init_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = Projection::init(4, 16, &mut rng);
        assert!(p.data.iter().all(|v| v.abs() <= 0.25));
    }
}
