//! Q-function representations (tabular over state keys, small dense
//! network), double-target TD updates, target-network management, and
//! epsilon-greedy action selection.

pub mod mlp;

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

pub use mlp::{gradient_check, MlpQ, OptimizerKind};

use crate::hashing::{ProjectionMatrix, StateKey};
use crate::rng::Prng;
use crate::types::{Observation, Transition};

#[derive(Debug, Error)]
pub enum QlearnError {
    #[error("malformed parameter dump: {0}")]
    Parse(String),
    #[error("parameter dump does not match this Q-function's shape")]
    ShapeMismatch,
}

/// Bootstrapping mode for the TD target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdMode {
    /// T = Q_target(s', argmax_a Q(s', a)).
    Double,
    /// T = max_a Q_target(s', a).
    VanillaMax,
}

/// Tabular Q table indexed by (projected state key, action), default 0
/// for unseen pairs.
#[derive(Debug, Clone)]
pub struct TabularQ {
    table: HashMap<(StateKey, usize), f64>,
    phi: ProjectionMatrix,
    n_actions: usize,
    lr: f64,
}

impl TabularQ {
    pub fn new(phi: ProjectionMatrix, n_actions: usize, lr: f64) -> Self {
        Self {
            table: HashMap::new(),
            phi,
            n_actions,
            lr,
        }
    }

    pub fn key(&self, s: &Observation) -> StateKey {
        self.phi.project(s).expect("observation matches projection")
    }

    pub fn value(&self, key: &StateKey, action: usize) -> f64 {
        self.table.get(&(key.clone(), action)).copied().unwrap_or(0.0)
    }

    fn set(&mut self, key: StateKey, action: usize, v: f64) {
        self.table.insert((key, action), v);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// A Q-function: tabular table or dense network, plus the operations the
/// training loop needs. Evaluation is deterministic; updates are
/// single-writer.
#[derive(Debug, Clone)]
pub enum QFunction {
    Tabular(TabularQ),
    Mlp(MlpQ),
}

impl QFunction {
    pub fn n_actions(&self) -> usize {
        match self {
            QFunction::Tabular(t) => t.n_actions,
            QFunction::Mlp(m) => m.n_actions(),
        }
    }

    pub fn q_values(&self, s: &Observation) -> Vec<f64> {
        match self {
            QFunction::Tabular(t) => {
                let key = t.key(s);
                (0..t.n_actions).map(|a| t.value(&key, a)).collect()
            }
            QFunction::Mlp(m) => m.q_values(s),
        }
    }

    pub fn q_value(&self, s: &Observation, action: usize) -> f64 {
        self.q_values(s)[action]
    }

    /// Greedy action with lowest-index tie-breaking.
    pub fn greedy_action(&self, s: &Observation) -> usize {
        argmax(&self.q_values(s))
    }

    /// One TD step on `batch` with per-sample importance weights.
    ///
    /// `target` is the frozen bootstrap network; `None` bootstraps from
    /// the online function itself (classic tabular Q-learning). Tabular
    /// updates are applied sequentially in batch order, so a batch in
    /// reverse topological order realizes the reverse sweep exactly;
    /// the network representation takes one gradient step on the whole
    /// batch. Returns per-sample TD errors for priority write-back.
    pub fn td_update(
        &mut self,
        target: Option<&QFunction>,
        batch: &[(&Transition, f64)],
        gamma: f64,
        mode: TdMode,
    ) -> Vec<f64> {
        match self {
            QFunction::Tabular(_) => {
                let mut deltas = Vec::with_capacity(batch.len());
                for &(t, w) in batch {
                    let y = td_target(self, target, t, gamma, mode);
                    let QFunction::Tabular(tab) = &mut *self else {
                        unreachable!()
                    };
                    let key = tab.key(&t.state);
                    let q = tab.value(&key, t.action);
                    let delta = y - q;
                    let lr = tab.lr;
                    tab.set(key, t.action, q + lr * w * delta);
                    deltas.push(delta);
                }
                deltas
            }
            QFunction::Mlp(_) => {
                let targets: Vec<f64> = batch
                    .iter()
                    .map(|&(t, _)| td_target(self, target, t, gamma, mode))
                    .collect();
                let samples: Vec<(&Observation, usize, f64, f64)> = batch
                    .iter()
                    .zip(&targets)
                    .map(|(&(t, w), &y)| (&t.state, t.action, y, w))
                    .collect();
                let QFunction::Mlp(net) = self else { unreachable!() };
                net.update_toward(&samples)
            }
        }
    }

    /// One step toward externally computed per-sample targets (used by
    /// backward episode replay and the error model).
    pub fn update_toward_targets(&mut self, batch: &[(&Transition, f64, f64)]) -> Vec<f64> {
        match self {
            QFunction::Tabular(tab) => {
                let mut deltas = Vec::with_capacity(batch.len());
                for &(t, y, w) in batch {
                    let key = tab.key(&t.state);
                    let q = tab.value(&key, t.action);
                    let delta = y - q;
                    let lr = tab.lr;
                    tab.set(key, t.action, q + lr * w * delta);
                    deltas.push(delta);
                }
                deltas
            }
            QFunction::Mlp(net) => {
                let samples: Vec<(&Observation, usize, f64, f64)> = batch
                    .iter()
                    .map(|&(t, y, w)| (&t.state, t.action, y, w))
                    .collect();
                net.update_toward(&samples)
            }
        }
    }

    /// Serialize parameters as line-oriented text with a shape header.
    pub fn save_to_string(&self) -> String {
        match self {
            QFunction::Tabular(t) => {
                let mut entries: Vec<(&(StateKey, usize), &f64)> = t.table.iter().collect();
                entries.sort_by(|a, b| a.0.cmp(b.0));
                let mut out = format!("tabular {} {}\n", t.n_actions, entries.len());
                for ((key, action), v) in entries {
                    out.push_str(&format!("{key} {action} {v}\n"));
                }
                out
            }
            QFunction::Mlp(m) => {
                let dims: Vec<String> = m.sizes().iter().map(|s| s.to_string()).collect();
                let mut out = format!("mlp {}\n", dims.join(" "));
                for i in 0..m.num_params() {
                    out.push_str(&format!("{}\n", m.param(i)));
                }
                out
            }
        }
    }

    /// Load parameters from `save_to_string` output into a Q-function of
    /// matching shape.
    pub fn load_from_string(&mut self, text: &str) -> Result<(), QlearnError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| QlearnError::Parse("empty dump".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        match (self, fields.first().copied()) {
            (QFunction::Tabular(t), Some("tabular")) => {
                let n_actions: usize = fields
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| QlearnError::Parse("bad tabular header".into()))?;
                if n_actions != t.n_actions {
                    return Err(QlearnError::ShapeMismatch);
                }
                let mut table = HashMap::new();
                for line in lines {
                    let parts: Vec<&str> = line.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(QlearnError::Parse(format!("bad entry: {line}")));
                    }
                    let key = parse_key(parts[0])?;
                    let action: usize = parts[1]
                        .parse()
                        .map_err(|_| QlearnError::Parse("bad action".into()))?;
                    let v: f64 = parts[2]
                        .parse()
                        .map_err(|_| QlearnError::Parse("bad value".into()))?;
                    table.insert((key, action), v);
                }
                t.table = table;
                Ok(())
            }
            (QFunction::Mlp(m), Some("mlp")) => {
                let dims: Vec<usize> = fields[1..]
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| QlearnError::Parse("bad mlp header".into()))?;
                if dims != m.sizes() {
                    return Err(QlearnError::ShapeMismatch);
                }
                let params: Vec<f64> = lines
                    .map(|l| l.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| QlearnError::Parse("bad parameter".into()))?;
                if params.len() != m.num_params() {
                    return Err(QlearnError::ShapeMismatch);
                }
                m.set_params(params);
                Ok(())
            }
            _ => Err(QlearnError::ShapeMismatch),
        }
    }
}

fn parse_key(hex: &str) -> Result<StateKey, QlearnError> {
    if !hex.len().is_multiple_of(16) || hex.is_empty() {
        return Err(QlearnError::Parse(format!("bad key: {hex}")));
    }
    let words: Result<Vec<u64>, _> = (0..hex.len() / 16)
        .map(|i| u64::from_str_radix(&hex[i * 16..(i + 1) * 16], 16))
        .collect();
    words
        .map(StateKey::from_bits)
        .map_err(|_| QlearnError::Parse(format!("bad key: {hex}")))
}

/// TD target y = r + (1 - terminal) * gamma * T. Timeout transitions
/// bootstrap normally; only task completion truncates.
fn td_target(
    online: &QFunction,
    target: Option<&QFunction>,
    t: &Transition,
    gamma: f64,
    mode: TdMode,
) -> f64 {
    if t.terminal {
        return t.reward;
    }
    let src = target.unwrap_or(online);
    let boot = match mode {
        TdMode::Double => {
            let a_star = online.greedy_action(&t.next_state);
            src.q_value(&t.next_state, a_star)
        }
        TdMode::VanillaMax => src
            .q_values(&t.next_state)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max),
    };
    t.reward + gamma * boot
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy: random action with probability eps, else greedy with
/// lowest-index tie-breaking.
pub fn select_action(q: &QFunction, s: &Observation, eps: f64, rng: &mut Prng) -> usize {
    if eps > 0.0 && rng.gen::<f64>() < eps {
        rng.gen_range(0..q.n_actions())
    } else {
        q.greedy_action(s)
    }
}

/// Hard target reset: parameter-exact copy of the online function.
pub fn sync_target(q: &QFunction, target: &mut QFunction) {
    *target = q.clone();
}

/// Linearly decayed exploration rate, clamped at the endpoints.
#[derive(Debug, Clone, Copy)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}
