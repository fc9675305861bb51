//! Proportional prioritized sampling with stratified draws and
//! importance-sampling weight correction.

use rand::Rng;
use thiserror::Error;

use crate::baselines::sum_tree::SumTree;
use crate::rng::Prng;
use crate::types::TransitionStore;

#[derive(Debug, Error)]
pub enum PerError {
    #[error("cannot draw a prioritized batch: no live transitions")]
    Empty,
}

const PRIORITY_EPS: f64 = 1e-6;

/// Proportional prioritized sampler over the shared transition arena.
///
/// Leaf slots mirror the arena ring: arena index i maps to leaf
/// i % capacity, so an insert overwrites the priority of the slot it
/// recycles. New transitions enter at the current maximum priority so
/// everything is replayed at least once. Sampling is stratified: the
/// cumulative mass is split into equal segments and one prefix is drawn
/// uniformly inside each. Expired slots discovered during a draw are
/// zeroed and redrawn.
#[derive(Debug, Clone)]
pub struct PerSampler {
    tree: SumTree,
    // Arena index currently occupying each leaf slot.
    slot_owner: Vec<Option<usize>>,
    capacity: usize,
    alpha: f64,
    beta: f64,
    max_priority: f64,
}

impl PerSampler {
    pub fn new(capacity: usize, alpha: f64, beta0: f64) -> Self {
        assert!(capacity >= 1);
        assert!((0.0..=1.0).contains(&alpha));
        assert!((0.0..=1.0).contains(&beta0));
        Self {
            tree: SumTree::new(capacity),
            slot_owner: vec![None; capacity],
            capacity,
            alpha,
            beta: beta0,
            max_priority: 1.0,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Anneal the IS exponent; clamped to [beta, 1].
    pub fn set_beta(&mut self, beta: f64) {
        self.beta = beta.clamp(0.0, 1.0);
    }

    /// Register a freshly appended transition at max priority.
    pub fn on_insert(&mut self, arena_index: usize) {
        let slot = arena_index % self.capacity;
        self.slot_owner[slot] = Some(arena_index);
        self.tree.set(slot, self.max_priority);
    }

    /// Write back priorities p = (|delta| + eps)^alpha after an update.
    pub fn update_priorities(&mut self, indices: &[usize], deltas: &[f64]) {
        assert_eq!(indices.len(), deltas.len());
        for (&idx, &delta) in indices.iter().zip(deltas) {
            let slot = idx % self.capacity;
            // The slot may have been recycled since the batch was drawn.
            if self.slot_owner[slot] != Some(idx) {
                continue;
            }
            let p = (delta.abs() + PRIORITY_EPS).powf(self.alpha);
            self.max_priority = self.max_priority.max(p);
            self.tree.set(slot, p);
        }
    }

    /// Draw a stratified batch; returns (arena indices, IS weights).
    /// Weights are (N * P(i))^-beta normalized by the batch maximum.
    pub fn sample(
        &mut self,
        store: &TransitionStore,
        batch_size: usize,
        rng: &mut Prng,
    ) -> Result<(Vec<usize>, Vec<f64>), PerError> {
        assert!(batch_size >= 1);
        let n_live = self.live_count(store);
        if n_live == 0 {
            return Err(PerError::Empty);
        }
        let mut indices = Vec::with_capacity(batch_size);
        let mut probs = Vec::with_capacity(batch_size);
        for seg in 0..batch_size {
            let mut attempts = 0;
            loop {
                let total = self.tree.total();
                if total <= 0.0 {
                    return Err(PerError::Empty);
                }
                let lo = total * seg as f64 / batch_size as f64;
                let hi = total * (seg + 1) as f64 / batch_size as f64;
                let prefix = rng.gen_range(lo..hi);
                let slot = self.tree.find(prefix);
                match self.slot_owner[slot] {
                    Some(idx) if store.is_live(idx) => {
                        indices.push(idx);
                        probs.push(self.tree.get(slot) / total);
                        break;
                    }
                    _ => {
                        // Stale slot: zero it out and redraw.
                        self.tree.set(slot, 0.0);
                        self.slot_owner[slot] = None;
                        attempts += 1;
                        if attempts > self.capacity {
                            return Err(PerError::Empty);
                        }
                    }
                }
            }
        }
        let weights: Vec<f64> = probs
            .iter()
            .map(|&p| (n_live as f64 * p).powf(-self.beta))
            .collect();
        let w_max = weights.iter().fold(0.0f64, |a, &b| a.max(b));
        let weights = weights.into_iter().map(|w| w / w_max).collect();
        Ok((indices, weights))
    }

    fn live_count(&self, store: &TransitionStore) -> usize {
        self.slot_owner
            .iter()
            .filter(|o| matches!(o, Some(idx) if store.is_live(*idx)))
            .count()
    }
}
