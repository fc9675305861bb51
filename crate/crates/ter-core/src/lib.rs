//! Topological experience replay: a replay buffer that tracks the MDP's
//! connectivity structure and schedules Q-updates along reverse
//! breadth-first sweeps from terminal states, alongside the standard
//! replay baselines, tabular and dense-network Q-learners, small
//! benchmark environments, and a deterministic experiment harness.

// Index-parallel numeric loops read better with explicit indices here.
#![allow(clippy::needless_range_loop)]

pub mod baselines;
pub mod config;
pub mod envs;
pub mod graph;
pub mod harness;
pub mod hashing;
pub mod qlearn;
pub mod rng;
pub mod sweep;
pub mod types;

pub use graph::{PredecessorMode, TopologicalGraph};
pub use hashing::{ProjectionMatrix, StateKey};
pub use qlearn::{select_action, sync_target, EpsilonSchedule, QFunction, TabularQ, TdMode};
pub use rng::{stream_rng, Prng, Stream};
pub use sweep::{BatchSource, MixedBatch, RootsMode, SweepBudgets, SweepState};
pub use types::{Observation, Transition, TransitionStore};
