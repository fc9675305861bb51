//! Deterministic chain of N positions: the agent starts at one end and
//! the single +1 reward sits behind the far end.

use indexmap::IndexSet;

use super::oracle::{MdpModel, Outcome};
use super::{EnvStep, Environment};
use crate::rng::Prng;
use crate::types::Observation;

pub const ACTION_BACKWARD: usize = 0;
pub const ACTION_FORWARD: usize = 1;

/// Positions 1..=N observed as one-hot vectors of length N. Action 1
/// moves forward, action 0 moves backward (a no-op at position 1).
/// Reward +1 exactly on the transition from position N-1 to the
/// terminal position N; 0 everywhere else.
#[derive(Debug, Clone)]
pub struct NChainEnv {
    n: usize,
    pos: usize,
    steps: u64,
    maxsteps: Option<u64>,
    done: bool,
}

impl NChainEnv {
    pub fn new(n: usize, maxsteps: Option<u64>) -> Self {
        assert!(n >= 2);
        Self {
            n,
            pos: 0,
            steps: 0,
            maxsteps,
            done: true,
        }
    }

    fn obs(&self, pos: usize) -> Observation {
        let mut v = vec![0.0; self.n];
        v[pos] = 1.0;
        Observation(v)
    }
}

impl Environment for NChainEnv {
    fn obs_dim(&self) -> usize {
        self.n
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn reset(&mut self, _rng: &mut Prng) -> Observation {
        self.pos = 0;
        self.steps = 0;
        self.done = false;
        self.obs(0)
    }

    fn step(&mut self, action: usize) -> EnvStep {
        assert!(!self.done, "step on finished episode");
        assert!(action < 2, "invalid action {action}");
        let goal = self.n - 1;
        let next = match action {
            ACTION_FORWARD => self.pos + 1,
            _ => self.pos.saturating_sub(1),
        };
        let reward = if self.pos == goal - 1 && next == goal {
            1.0
        } else {
            0.0
        };
        let terminal = next == goal;
        self.pos = next;
        self.steps += 1;
        let timeout = !terminal && self.maxsteps.is_some_and(|m| self.steps >= m);
        self.done = terminal || timeout;
        EnvStep {
            obs: self.obs(next),
            reward,
            terminal,
            timeout,
        }
    }

    fn return_bounds(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn max_episode_steps(&self) -> Option<u64> {
        self.maxsteps
    }

    fn model(&self) -> Option<MdpModel> {
        let goal = self.n - 1;
        let observations = (0..self.n).map(|i| self.obs(i)).collect();
        let mut transitions = vec![vec![Vec::new(); 2]; self.n];
        for s in 0..goal {
            transitions[s][ACTION_BACKWARD] = vec![Outcome {
                prob: 1.0,
                next: s.saturating_sub(1),
                reward: 0.0,
                terminal: false,
            }];
            transitions[s][ACTION_FORWARD] = vec![Outcome {
                prob: 1.0,
                next: s + 1,
                reward: if s + 1 == goal { 1.0 } else { 0.0 },
                terminal: s + 1 == goal,
            }];
        }
        Some(MdpModel {
            observations,
            n_actions: 2,
            transitions,
            terminal_states: IndexSet::from([goal]),
            start_state: 0,
        })
    }
}
