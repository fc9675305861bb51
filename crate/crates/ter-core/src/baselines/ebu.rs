//! Backward episode replay: sample a whole episode and compute targets
//! from the last step to the first with a diffusion mixture.

use std::collections::VecDeque;

use rand::Rng;
use thiserror::Error;

use crate::qlearn::QFunction;
use crate::rng::Prng;
use crate::types::TransitionStore;

#[derive(Debug, Error)]
pub enum EbuError {
    #[error("no eligible complete episodes to replay")]
    NoEpisodes,
}

/// Episode index over the shared transition arena.
///
/// Episodes are closed when a transition carries the terminal or
/// timeout flag; `include_timeout_roots` controls whether
/// timeout-truncated episodes may be sampled. Episodes whose oldest
/// transition has aged out of the store are pruned lazily.
#[derive(Debug, Clone)]
pub struct EpisodeBuffer {
    episodes: VecDeque<Episode>,
    open: Vec<usize>,
    diffusion: f64,
    include_timeout_roots: bool,
}

#[derive(Debug, Clone)]
struct Episode {
    indices: Vec<usize>,
    ends_in_timeout: bool,
}

impl EpisodeBuffer {
    pub fn new(diffusion: f64, include_timeout_roots: bool) -> Self {
        assert!((0.0..=1.0).contains(&diffusion));
        Self {
            episodes: VecDeque::new(),
            open: Vec::new(),
            diffusion,
            include_timeout_roots,
        }
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn num_episodes(&self) -> usize {
        self.episodes.len()
    }

    /// Record a freshly appended transition; closes the open episode on
    /// a terminal or timeout flag.
    pub fn on_insert(&mut self, arena_index: usize, terminal: bool, timeout: bool) {
        self.open.push(arena_index);
        if terminal || timeout {
            self.episodes.push_back(Episode {
                indices: std::mem::take(&mut self.open),
                ends_in_timeout: timeout && !terminal,
            });
        }
    }

    fn prune(&mut self, store: &TransitionStore) {
        while let Some(ep) = self.episodes.front() {
            // Oldest transition first: if it is live the whole episode is.
            if !store.is_live(ep.indices[0]) {
                self.episodes.pop_front();
            } else {
                break;
            }
        }
    }

    /// Sample one episode uniformly and return its transition indices
    /// in reverse time order together with precomputed TD targets.
    ///
    /// Targets run back-to-front: the final step uses y = r if terminal
    /// (bootstrapping past the cut on a timeout), and each earlier step
    /// bootstraps from the target network's Q-row for its successor
    /// state with the taken action's entry replaced by the diffusion
    /// mixture beta * y_next + (1 - beta) * Q_target. With beta = 0 the
    /// row is untouched and the targets are ordinary one-step targets.
    pub fn ebu_batch(
        &mut self,
        store: &TransitionStore,
        q_target: &QFunction,
        gamma: f64,
        rng: &mut Prng,
    ) -> Result<(Vec<usize>, Vec<f64>), EbuError> {
        self.prune(store);
        let eligible: Vec<usize> = self
            .episodes
            .iter()
            .enumerate()
            .filter(|(_, ep)| self.include_timeout_roots || !ep.ends_in_timeout)
            .map(|(i, _)| i)
            .collect();
        if eligible.is_empty() {
            return Err(EbuError::NoEpisodes);
        }
        let ep = &self.episodes[eligible[rng.gen_range(0..eligible.len())]];
        let mut indices = Vec::with_capacity(ep.indices.len());
        let mut targets = Vec::with_capacity(ep.indices.len());
        let mut y_next = 0.0;
        let mut a_next = 0;
        for (pos, &idx) in ep.indices.iter().enumerate().rev() {
            let t = store.get(idx).expect("live episode transition");
            let y = if pos == ep.indices.len() - 1 {
                if t.terminal {
                    t.reward
                } else {
                    // Timeout cut: plain bootstrap beyond the truncation.
                    let row = q_target.q_values(&t.next_state);
                    t.reward + gamma * max(&row)
                }
            } else {
                let mut row = q_target.q_values(&t.next_state);
                row[a_next] = self.diffusion * y_next + (1.0 - self.diffusion) * row[a_next];
                t.reward + gamma * max(&row)
            };
            indices.push(idx);
            targets.push(y);
            y_next = y;
            a_next = t.action;
        }
        Ok((indices, targets))
    }
}

fn max(row: &[f64]) -> f64 {
    row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}
