//! Exact MDP model extraction and value iteration, the ground-truth
//! oracle behind the value-error metric.

use indexmap::IndexSet;
use thiserror::Error;

use crate::types::Observation;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("value iteration failed to converge within {0} iterations")]
    NoConvergence(usize),
}

/// One probabilistic outcome of taking an action: probability, successor
/// state id, reward, and whether the successor is terminal (absorbing,
/// value 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub next: usize,
    pub reward: f64,
    pub terminal: bool,
}

/// Enumerated finite MDP: state id -> observation, and per-(state,
/// action) outcome distributions. Terminal states appear as successors
/// only; no outgoing rows are consulted for them.
#[derive(Debug, Clone)]
pub struct MdpModel {
    pub observations: Vec<Observation>,
    pub n_actions: usize,
    /// transitions[s][a] lists that pair's outcome distribution.
    pub transitions: Vec<Vec<Vec<Outcome>>>,
    pub terminal_states: IndexSet<usize>,
    pub start_state: usize,
}

impl MdpModel {
    pub fn n_states(&self) -> usize {
        self.observations.len()
    }

    pub fn validate(&self) {
        assert_eq!(self.transitions.len(), self.n_states());
        for (s, rows) in self.transitions.iter().enumerate() {
            if self.terminal_states.contains(&s) {
                continue;
            }
            assert_eq!(rows.len(), self.n_actions, "state {s} missing actions");
            for (a, outcomes) in rows.iter().enumerate() {
                let p: f64 = outcomes.iter().map(|o| o.prob).sum();
                assert!(
                    (p - 1.0).abs() < 1e-9,
                    "state {s} action {a}: probabilities sum to {p}"
                );
                for o in outcomes {
                    assert!(o.next < self.n_states());
                    assert_eq!(o.terminal, self.terminal_states.contains(&o.next));
                }
            }
        }
    }
}

const MAX_ITERS: usize = 1_000_000;
const TOLERANCE: f64 = 1e-10;

/// Q* by value iteration to a sup-norm fixed point below 1e-10.
/// Terminal states contribute zero continuation value.
pub fn value_iteration(model: &MdpModel, gamma: f64) -> Result<Vec<Vec<f64>>, OracleError> {
    let n = model.n_states();
    let mut q = vec![vec![0.0; model.n_actions]; n];
    for _ in 0..MAX_ITERS {
        let mut next = vec![vec![0.0; model.n_actions]; n];
        let mut delta = 0.0f64;
        for s in 0..n {
            if model.terminal_states.contains(&s) {
                continue;
            }
            for a in 0..model.n_actions {
                let mut v = 0.0;
                for o in &model.transitions[s][a] {
                    let cont = if o.terminal {
                        0.0
                    } else {
                        q[o.next].iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
                    };
                    v += o.prob * (o.reward + gamma * cont);
                }
                next[s][a] = v;
                delta = delta.max((v - q[s][a]).abs());
            }
        }
        q = next;
        if delta < TOLERANCE {
            return Ok(q);
        }
    }
    Err(OracleError::NoConvergence(MAX_ITERS))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Chain of n positions, actions {0: backward, 1: forward}, +1 on
    /// the transition into the last (terminal) position.
    fn chain_model(n: usize) -> MdpModel {
        let observations = (0..n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                Observation(v)
            })
            .collect();
        let mut transitions = vec![vec![Vec::new(); 2]; n];
        let goal = n - 1;
        for s in 0..n - 1 {
            let back = s.saturating_sub(1);
            transitions[s][0] = vec![Outcome {
                prob: 1.0,
                next: back,
                reward: 0.0,
                terminal: false,
            }];
            transitions[s][1] = vec![Outcome {
                prob: 1.0,
                next: s + 1,
                reward: if s + 1 == goal { 1.0 } else { 0.0 },
                terminal: s + 1 == goal,
            }];
        }
        MdpModel {
            observations,
            n_actions: 2,
            transitions,
            terminal_states: IndexSet::from([goal]),
            start_state: 0,
        }
    }

    #[test]
    fn three_state_chain_undiscounted() {
        let m = chain_model(3);
        m.validate();
        let q = value_iteration(&m, 1.0).unwrap();
        // Reward reachable from everywhere: all values 1.
        for s in 0..2 {
            for a in 0..2 {
                assert!((q[s][a] - 1.0).abs() < 1e-9, "q[{s}][{a}] = {}", q[s][a]);
            }
        }
    }

    #[test]
    fn three_state_chain_discounted() {
        let m = chain_model(3);
        let q = value_iteration(&m, 0.9).unwrap();
        // s index 0 = position 1, 1 = position 2; action 1 = forward.
        assert!((q[1][1] - 1.0).abs() < 1e-9);
        assert!((q[0][1] - 0.9).abs() < 1e-9);
        assert!((q[0][0] - 0.81).abs() < 1e-9);
        assert!((q[1][0] - 0.81).abs() < 1e-9);
    }

    #[test]
    fn gamma_zero_collapses_to_immediate_reward() {
        let m = chain_model(5);
        let q = value_iteration(&m, 0.0).unwrap();
        for s in 0..4 {
            for a in 0..2 {
                let expect = m.transitions[s][a][0].reward;
                assert!((q[s][a] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stochastic_outcomes_average_correctly() {
        // Single state, action leads to terminal reward 1 w.p. 0.3 and
        // terminal reward 0 w.p. 0.7: Q = 0.3.
        let m = MdpModel {
            observations: vec![
                Observation(vec![1.0, 0.0]),
                Observation(vec![0.0, 1.0]),
            ],
            n_actions: 1,
            transitions: vec![
                vec![vec![
                    Outcome {
                        prob: 0.3,
                        next: 1,
                        reward: 1.0,
                        terminal: true,
                    },
                    Outcome {
                        prob: 0.7,
                        next: 1,
                        reward: 0.0,
                        terminal: true,
                    },
                ]],
                vec![],
            ],
            terminal_states: IndexSet::from([1]),
            start_state: 0,
        };
        m.validate();
        let q = value_iteration(&m, 0.99).unwrap();
        assert!((q[0][0] - 0.3).abs() < 1e-12);
    }
}
