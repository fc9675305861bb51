//! Reverse breadth-first sweep state machine producing topologically
//! ordered training batches, plus PER/TER batch mixing.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

use crate::baselines::per::PerSampler;
use crate::graph::{PerEdgeBudget, PredecessorMode, TopologicalGraph};
use crate::hashing::StateKey;
use crate::rng::Prng;
use crate::types::{TransitionIndex, TransitionStore};

/// Raised when the sweep cannot produce transitions: the terminal set is
/// empty or repeated resets add nothing. The caller falls back to a
/// random batch for the step so training stays alive pre-first-success.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("reverse sweep starved: no roots or no progress after resets")]
pub struct Starved;

/// Where sweep roots come from on each reset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootsMode {
    /// Uniform over the terminal vertex set (default).
    Terminal,
    /// Boltzmann over per-vertex mean returns, for environments without
    /// true terminal states.
    PseudoTerminal { kappa: f64 },
}

/// Budgets bounding one expansion step of the sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepBudgets {
    /// Number of root vertices sampled per reset.
    pub roots: usize,
    /// Max distinct predecessors expanded per frontier vertex.
    pub predecessors: usize,
    /// Transitions drawn per selected edge (`None` = all).
    pub per_edge: PerEdgeBudget,
    pub mode: PredecessorMode,
}

impl Default for SweepBudgets {
    fn default() -> Self {
        Self {
            roots: 8,
            predecessors: 3,
            per_edge: Some(1),
            mode: PredecessorMode::Uniform,
        }
    }
}

/// BFS state persisted across Q-updates: the search frontier survives
/// between batches and the sweep resumes where it stopped.
#[derive(Debug)]
pub struct SweepState {
    search_queue: VecDeque<StateKey>,
    visited: HashSet<StateKey>,
    batch_queue: VecDeque<TransitionIndex>,
    roots_mode: RootsMode,
    /// Bound on consecutive resets that add zero transitions before
    /// refill reports starvation.
    max_barren_resets: usize,
    /// Expansion log per sweep epoch, kept only when instrumentation is on.
    expansion_log: Option<Vec<Vec<StateKey>>>,
}

impl SweepState {
    pub fn new(roots_mode: RootsMode) -> Self {
        Self {
            search_queue: VecDeque::new(),
            visited: HashSet::new(),
            batch_queue: VecDeque::new(),
            roots_mode,
            max_barren_resets: 3,
            expansion_log: None,
        }
    }

    /// Record the vertices expanded in each epoch (test instrumentation).
    pub fn enable_expansion_log(&mut self) {
        self.expansion_log = Some(vec![Vec::new()]);
    }

    pub fn expansion_log(&self) -> Option<&[Vec<StateKey>]> {
        self.expansion_log.as_deref()
    }

    pub fn queued_batch_len(&self) -> usize {
        self.batch_queue.len()
    }

    /// Grow `batch_queue` to at least `want` transitions by expanding the
    /// reverse BFS, resetting from freshly sampled roots whenever the
    /// frontier empties. Frontier vertices whose edges were pruned
    /// mid-sweep simply expand to nothing.
    pub fn refill(
        &mut self,
        g: &TopologicalGraph,
        want: usize,
        budgets: &SweepBudgets,
        rng: &mut Prng,
    ) -> Result<(), Starved> {
        let mut barren_resets = 0;
        while self.batch_queue.len() < want {
            let frontier = loop {
                match self.search_queue.pop_front() {
                    Some(v) if self.visited.contains(&v) => continue,
                    other => break other,
                }
            };
            let Some(v_prime) = frontier else {
                if barren_resets >= self.max_barren_resets {
                    return Err(Starved);
                }
                let roots = match self.roots_mode {
                    RootsMode::Terminal => g.sample_terminal_roots(budgets.roots, rng),
                    RootsMode::PseudoTerminal { kappa } => g
                        .sample_pseudo_roots(budgets.roots, kappa, rng)
                        .unwrap_or_default(),
                };
                if roots.is_empty() {
                    return Err(Starved);
                }
                self.visited.clear();
                self.search_queue.extend(roots);
                if let Some(log) = self.expansion_log.as_mut() {
                    log.push(Vec::new());
                }
                barren_resets += 1;
                continue;
            };

            let before = self.batch_queue.len();
            for (v, indices) in g.predecessor_edges(
                &v_prime,
                budgets.predecessors,
                budgets.per_edge,
                budgets.mode,
                rng,
            ) {
                self.search_queue.push_back(v);
                self.batch_queue.extend(indices);
            }
            self.visited.insert(v_prime.clone());
            if let Some(log) = self.expansion_log.as_mut() {
                log.last_mut().unwrap().push(v_prime);
            }
            if self.batch_queue.len() > before {
                barren_resets = 0;
            }
        }
        Ok(())
    }

    /// Pop exactly `b` indices FIFO. Caller must have refilled first;
    /// underflow is a contract violation.
    pub fn pop_batch(&mut self, b: usize) -> Vec<TransitionIndex> {
        assert!(
            self.batch_queue.len() >= b,
            "pop_batch underflow: {} queued, {b} requested",
            self.batch_queue.len()
        );
        self.batch_queue.drain(..b).collect()
    }

    /// Produce `b` non-expired indices, pruning expired queue members
    /// from the graph and popping replacements as needed.
    pub fn next_batch(
        &mut self,
        g: &mut TopologicalGraph,
        store: &TransitionStore,
        b: usize,
        budgets: &SweepBudgets,
        rng: &mut Prng,
    ) -> Result<Vec<TransitionIndex>, Starved> {
        let mut out = Vec::with_capacity(b);
        while out.len() < b {
            if self.batch_queue.is_empty() {
                self.refill(g, b - out.len(), budgets, rng)?;
            }
            let idx = self.batch_queue.pop_front().expect("refilled above");
            if store.is_expired(idx).unwrap_or(true) {
                g.remove_transition(idx);
            } else {
                out.push(idx);
            }
        }
        Ok(out)
    }
}

/// Origin tag for each member of a mixed batch; only PER-sourced
/// members get priority write-back after the TD step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSource {
    Ter,
    Per,
}

#[derive(Debug)]
pub struct MixedBatch {
    pub indices: Vec<TransitionIndex>,
    pub weights: Vec<f64>,
    pub sources: Vec<BatchSource>,
    /// True when the sweep starved and the whole batch came from PER.
    pub ter_starved: bool,
}

/// PER share is ceil(eta * B); the remainder comes from the sweep with
/// importance weight 1. On sweep starvation the entire batch is drawn
/// from PER and tagged accordingly.
#[allow(clippy::too_many_arguments)]
pub fn mixed_batch(
    sw: &mut SweepState,
    g: &mut TopologicalGraph,
    store: &TransitionStore,
    per: &mut PerSampler,
    eta: f64,
    b: usize,
    budgets: &SweepBudgets,
    rng: &mut Prng,
) -> MixedBatch {
    assert!((0.0..=1.0).contains(&eta), "eta must be in [0, 1]");
    let n_per = ((eta * b as f64).ceil() as usize).min(b);
    let n_ter = b - n_per;

    let mut indices = Vec::with_capacity(b);
    let mut weights = Vec::with_capacity(b);
    let mut sources = Vec::with_capacity(b);
    let mut ter_starved = false;

    if n_ter > 0 {
        match sw.next_batch(g, store, n_ter, budgets, rng) {
            Ok(ter_part) => {
                for idx in ter_part {
                    indices.push(idx);
                    weights.push(1.0);
                    sources.push(BatchSource::Ter);
                }
            }
            Err(Starved) => ter_starved = true,
        }
    }

    let per_want = b - indices.len();
    if per_want > 0 {
        if let Ok((per_idx, per_w)) = per.sample(store, per_want, rng) {
            for (idx, w) in per_idx.into_iter().zip(per_w) {
                indices.push(idx);
                weights.push(w);
                sources.push(BatchSource::Per);
            }
        }
    }

    MixedBatch {
        indices,
        weights,
        sources,
        ter_starved,
    }
}
