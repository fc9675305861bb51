//! Shared domain types: observations, transitions, and the bounded
//! transition arena that every replay strategy indexes into.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a transition inside a [`TransitionStore`] arena.
pub type TransitionIndex = usize;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("transition index {0} out of bounds (arena holds {1})")]
    InvalidIndex(TransitionIndex, usize),
    #[error("transition is flagged both terminal and timeout")]
    TerminalTimeoutConflict,
    #[error("non-finite value in transition (reward or observation)")]
    NonFinite,
    #[error("insert_step {0} is below current store step {1}")]
    StepRegression(u64, u64),
}

/// A fixed-length real vector: flattened symbolic grid or one-hot chain
/// position. Dimensionality is fixed per environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One environment step: the atom of every replay buffer.
///
/// `terminal` marks task completion; `timeout` marks an episode reset
/// without task completion. The two are mutually exclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Observation,
    pub action: usize,
    pub reward: f64,
    pub next_state: Observation,
    pub terminal: bool,
    pub timeout: bool,
    /// Environment-step counter at insertion; drives age-based expiry.
    pub insert_step: u64,
}

impl Transition {
    pub fn validate(&self) -> Result<(), StoreError> {
        if self.terminal && self.timeout {
            return Err(StoreError::TerminalTimeoutConflict);
        }
        if !self.reward.is_finite() || !self.state.is_finite() || !self.next_state.is_finite() {
            return Err(StoreError::NonFinite);
        }
        Ok(())
    }
}

/// Append-only transition arena shared by all replay strategies.
///
/// Eviction is lazy: a transition whose age (`current_step - insert_step`)
/// strictly exceeds `capacity` is expired and must never appear in a
/// training batch. Indices stay stable; samplers filter on expiry.
#[derive(Debug)]
pub struct TransitionStore {
    arena: Vec<Transition>,
    capacity: u64,
    current_step: u64,
}

impl TransitionStore {
    pub fn new(capacity: u64) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        Self {
            arena: Vec::new(),
            capacity,
            current_step: 0,
        }
    }

    pub fn append(&mut self, t: Transition) -> Result<TransitionIndex, StoreError> {
        t.validate()?;
        if t.insert_step < self.current_step {
            return Err(StoreError::StepRegression(t.insert_step, self.current_step));
        }
        self.current_step = t.insert_step;
        self.arena.push(t);
        Ok(self.arena.len() - 1)
    }

    pub fn get(&self, idx: TransitionIndex) -> Result<&Transition, StoreError> {
        self.arena
            .get(idx)
            .ok_or(StoreError::InvalidIndex(idx, self.arena.len()))
    }

    /// Age strictly greater than capacity means expired; a transition
    /// at exactly age == capacity still survives.
    pub fn is_expired(&self, idx: TransitionIndex) -> Result<bool, StoreError> {
        let t = self.get(idx)?;
        Ok(self.current_step - t.insert_step > self.capacity)
    }

    /// Infallible liveness check: in-bounds and not expired.
    pub fn is_live(&self, idx: TransitionIndex) -> bool {
        self.arena
            .get(idx)
            .is_some_and(|t| self.current_step - t.insert_step <= self.capacity)
    }

    /// Advance the step counter without appending (e.g. steps where the
    /// transition is consumed elsewhere). Never moves backwards.
    pub fn advance_step(&mut self, step: u64) {
        if step > self.current_step {
            self.current_step = step;
        }
    }

    pub fn len(&self) -> usize {
        self.arena.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arena.is_empty()
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn current_step(&self) -> u64 {
        self.current_step
    }

    /// Indices of all currently non-expired transitions, in insertion order.
    pub fn live_indices(&self) -> Vec<TransitionIndex> {
        (0..self.arena.len())
            .filter(|&i| self.current_step - self.arena[i].insert_step <= self.capacity)
            .collect()
    }
}
