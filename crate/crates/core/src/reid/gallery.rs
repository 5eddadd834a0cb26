use std::collections::VecDeque;

use super::embedding::{distance, Embedding};

pub const DEFAULT_GALLERY_CAPACITY: usize = 64;
pub const DEFAULT_RHO_REID: f64 = 2.3;
pub const DEFAULT_QUORUM: f64 = 0.30;

// Absorbs rounding in k/n when k/n sits exactly on the quorum.
const QUORUM_EPS: f64 = 1e-12;

/// Bounded FIFO of embeddings collected for one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Gallery {
    instance_id: u32,
    capacity: usize,
    feats: VecDeque<Embedding>,
}

impl Gallery {
    pub fn new(instance_id: u32, capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Gallery {
            instance_id,
            capacity,
            feats: VecDeque::with_capacity(capacity),
        }
    }

    pub fn instance_id(&self) -> u32 {
        self.instance_id
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.feats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feats.is_empty()
    }

    /// Appends, evicting the oldest feature when full.
    pub fn push(&mut self, e: Embedding) {
        if self.feats.len() == self.capacity {
            self.feats.pop_front();
        }
        self.feats.push_back(e);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Embedding> {
        self.feats.iter()
    }

    /// Quorum match: returns the minimum distance to `q` when at least
    /// `quorum` of the stored features lie strictly closer than `rho_reid`.
    pub fn match_score(&self, q: &Embedding, rho_reid: f64, quorum: f64) -> Option<f64> {
        if self.feats.is_empty() {
            return None;
        }
        let mut within = 0usize;
        let mut best = f64::INFINITY;
        for f in &self.feats {
            let d = distance(q, f);
            if d < rho_reid {
                within += 1;
            }
            best = best.min(d);
        }
        quorum_met(within, self.feats.len(), quorum).then_some(best)
    }
}

pub(crate) fn quorum_met(within: usize, total: usize, quorum: f64) -> bool {
    total > 0 && within as f64 / total as f64 >= quorum - QUORUM_EPS
}

pub fn gallery_match(g: &Gallery, q: &Embedding, rho_reid: f64, quorum: f64) -> Option<f64> {
    g.match_score(q, rho_reid, quorum)
}
