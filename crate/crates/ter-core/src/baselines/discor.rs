//! Corrective-feedback reweighting: an auxiliary error model estimates
//! accumulated bootstrapping error and down-weights updates whose
//! targets rest on poorly-estimated successors.

use crate::qlearn::QFunction;
use crate::types::Transition;

/// Error estimator Delta with its own frozen copy, plus the temperature
/// driving the weighting.
///
/// Weights are w_i proportional to exp(-gamma * Delta(s'_i, a'_i) / tau)
/// with a'_i the greedy next action under the online Q, normalized to
/// mean 1 over the batch (keeps the effective learning rate stable when
/// Delta estimates grow; toggleable). Delta trains toward
/// |delta_i| + gamma * Delta_target(s'_i, a'_i), zero past terminals.
/// tau starts at 10.0 and is reset at each target sync to the running
/// mean of Delta predictions over the training batches seen since the
/// previous sync.
#[derive(Debug, Clone)]
pub struct DiscorModel {
    delta: QFunction,
    delta_target: QFunction,
    tau: f64,
    normalize: bool,
    acc_sum: f64,
    acc_count: u64,
}

impl DiscorModel {
    pub const INITIAL_TAU: f64 = 10.0;

    pub fn new(delta: QFunction) -> Self {
        let delta_target = delta.clone();
        Self {
            delta,
            delta_target,
            tau: Self::INITIAL_TAU,
            normalize: true,
            acc_sum: 0.0,
            acc_count: 0,
        }
    }

    pub fn with_normalization(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Delta prediction, clamped to its non-negative codomain.
    fn predict(&self, t: &Transition, a_next: usize) -> f64 {
        self.delta.q_value(&t.next_state, a_next).max(0.0)
    }

    /// Per-sample weights for a batch, accumulating the tau statistic.
    pub fn weights(&mut self, q: &QFunction, batch: &[&Transition], gamma: f64) -> Vec<f64> {
        let mut weights = Vec::with_capacity(batch.len());
        for t in batch {
            let d = if t.terminal {
                0.0
            } else {
                let a_next = q.greedy_action(&t.next_state);
                self.predict(t, a_next)
            };
            self.acc_sum += d;
            self.acc_count += 1;
            weights.push((-gamma * d / self.tau).exp());
        }
        if self.normalize {
            let mean = weights.iter().sum::<f64>() / weights.len() as f64;
            if mean > 0.0 {
                for w in &mut weights {
                    *w /= mean;
                }
            }
        }
        weights
    }

    /// One training step on the error model from the Q-update's TD
    /// errors.
    pub fn train(&mut self, q: &QFunction, batch: &[&Transition], deltas: &[f64], gamma: f64) {
        assert_eq!(batch.len(), deltas.len());
        let targets: Vec<f64> = batch
            .iter()
            .zip(deltas)
            .map(|(t, &d)| {
                let boot = if t.terminal {
                    0.0
                } else {
                    let a_next = q.greedy_action(&t.next_state);
                    self.delta_target.q_value(&t.next_state, a_next).max(0.0)
                };
                d.abs() + gamma * boot
            })
            .collect();
        let samples: Vec<(&Transition, f64, f64)> = batch
            .iter()
            .zip(&targets)
            .map(|(&t, &y)| (t, y, 1.0))
            .collect();
        self.delta.update_toward_targets(&samples);
    }

    /// Target-sync hook: freeze Delta and reset tau from the
    /// accumulated batch statistic.
    pub fn sync(&mut self) {
        self.delta_target = self.delta.clone();
        if self.acc_count > 0 {
            let mean = self.acc_sum / self.acc_count as f64;
            if mean > 0.0 {
                self.tau = mean;
            }
        }
        self.acc_sum = 0.0;
        self.acc_count = 0;
    }
}
