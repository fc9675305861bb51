//! Experiment configuration: flat key = value text format, defaults,
//! and validation.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`, got `{1}`")]
    Syntax(usize, String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{0}`: `{1}`")]
    BadValue(String, String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Ter,
    TerMixed,
    Uer,
    Per,
    Ebu,
    Discor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerSpec {
    Tabular,
    Mlp { layers: Vec<usize> },
}

/// Full experiment description; `(seed, config)` determines every
/// emitted number.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub env: String,
    pub seed: u64,
    pub total_steps: u64,
    pub warmup_steps: u64,
    pub batch_size: usize,
    /// Gradient updates per environment step (may be fractional).
    pub replay_ratio: f64,
    pub gamma: f64,
    /// PER fraction of each mixed batch.
    pub eta: f64,
    pub capacity: u64,
    pub projection_dim: usize,
    pub root_budget: usize,
    pub predecessor_budget: usize,
    /// Transitions per selected edge; 0 means all.
    pub per_edge_budget: usize,
    pub sampler: SamplerKind,
    /// Sample sweep roots from the Boltzmann pseudo-terminal
    /// distribution instead of the terminal set.
    pub pseudo_terminal_roots: bool,
    pub kappa: f64,
    /// Weight predecessor selection by edge visitation counts.
    pub stochastic_pred_weighting: bool,
    /// Accumulate vertex returns with discounting instead of plain sums.
    pub discounted_vertex_returns: bool,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_steps: u64,
    /// 0 = bootstrap from the online network (no target copy).
    pub target_update_interval: u64,
    pub double_dqn: bool,
    pub learner: LearnerSpec,
    pub learning_rate: f64,
    pub per_alpha: f64,
    pub per_beta0: f64,
    pub ebu_beta: f64,
    pub ebu_include_timeout: bool,
    pub discor_normalize: bool,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub eval_random_prob: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: "nchain:N=20".into(),
            seed: 0,
            total_steps: 20_000,
            warmup_steps: 1_000,
            batch_size: 32,
            replay_ratio: 0.25,
            gamma: 0.99,
            eta: 0.0,
            capacity: 100_000,
            projection_dim: 3,
            root_budget: 8,
            predecessor_budget: 3,
            per_edge_budget: 1,
            sampler: SamplerKind::Ter,
            pseudo_terminal_roots: false,
            kappa: 0.01,
            stochastic_pred_weighting: false,
            discounted_vertex_returns: false,
            eps_start: 1.0,
            eps_end: 0.01,
            eps_decay_steps: 10_000,
            target_update_interval: 100,
            double_dqn: true,
            learner: LearnerSpec::Tabular,
            learning_rate: 0.5,
            per_alpha: 0.6,
            per_beta0: 0.4,
            ebu_beta: 0.5,
            ebu_include_timeout: true,
            discor_normalize: true,
            eval_interval: 500,
            eval_episodes: 20,
            eval_random_prob: 0.0,
        }
    }
}

impl ExperimentConfig {
    /// Parse the flat `key = value` format. Blank lines and `#`
    /// comments are skipped; later keys override earlier ones.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax(lineno + 1, line.to_string()))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue(key.to_string(), value.to_string());
        match key {
            "env" => self.env = value.to_string(),
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "total_steps" => self.total_steps = value.parse().map_err(|_| bad())?,
            "warmup_steps" => self.warmup_steps = value.parse().map_err(|_| bad())?,
            "batch_size" => self.batch_size = value.parse().map_err(|_| bad())?,
            "replay_ratio" => self.replay_ratio = value.parse().map_err(|_| bad())?,
            "gamma" => self.gamma = value.parse().map_err(|_| bad())?,
            "eta" => self.eta = value.parse().map_err(|_| bad())?,
            "capacity" => self.capacity = value.parse().map_err(|_| bad())?,
            "projection_dim" => self.projection_dim = value.parse().map_err(|_| bad())?,
            "root_budget" => self.root_budget = value.parse().map_err(|_| bad())?,
            "predecessor_budget" => self.predecessor_budget = value.parse().map_err(|_| bad())?,
            "per_edge_budget" => self.per_edge_budget = value.parse().map_err(|_| bad())?,
            "sampler" => {
                self.sampler = match value {
                    "ter" => SamplerKind::Ter,
                    "ter_mixed" => SamplerKind::TerMixed,
                    "uer" => SamplerKind::Uer,
                    "per" => SamplerKind::Per,
                    "ebu" => SamplerKind::Ebu,
                    "discor" => SamplerKind::Discor,
                    _ => return Err(bad()),
                }
            }
            "pseudo_terminal_roots" => {
                self.pseudo_terminal_roots = value.parse().map_err(|_| bad())?
            }
            "kappa" => self.kappa = value.parse().map_err(|_| bad())?,
            "stochastic_pred_weighting" => {
                self.stochastic_pred_weighting = value.parse().map_err(|_| bad())?
            }
            "discounted_vertex_returns" => {
                self.discounted_vertex_returns = value.parse().map_err(|_| bad())?
            }
            "eps_start" => self.eps_start = value.parse().map_err(|_| bad())?,
            "eps_end" => self.eps_end = value.parse().map_err(|_| bad())?,
            "eps_decay_steps" => self.eps_decay_steps = value.parse().map_err(|_| bad())?,
            "target_update_interval" => {
                self.target_update_interval = value.parse().map_err(|_| bad())?
            }
            "double_dqn" => self.double_dqn = value.parse().map_err(|_| bad())?,
            "learner" => {
                self.learner = if value == "tabular" {
                    LearnerSpec::Tabular
                } else if let Some(layers) = value.strip_prefix("mlp:") {
                    let layers: Result<Vec<usize>, _> =
                        layers.split(',').map(|s| s.trim().parse()).collect();
                    LearnerSpec::Mlp {
                        layers: layers.map_err(|_| bad())?,
                    }
                } else {
                    return Err(bad());
                }
            }
            "learning_rate" => self.learning_rate = value.parse().map_err(|_| bad())?,
            "per_alpha" => self.per_alpha = value.parse().map_err(|_| bad())?,
            "per_beta0" => self.per_beta0 = value.parse().map_err(|_| bad())?,
            "ebu_beta" => self.ebu_beta = value.parse().map_err(|_| bad())?,
            "ebu_include_timeout" => {
                self.ebu_include_timeout = value.parse().map_err(|_| bad())?
            }
            "discor_normalize" => self.discor_normalize = value.parse().map_err(|_| bad())?,
            "eval_interval" => self.eval_interval = value.parse().map_err(|_| bad())?,
            "eval_episodes" => self.eval_episodes = value.parse().map_err(|_| bad())?,
            "eval_random_prob" => self.eval_random_prob = value.parse().map_err(|_| bad())?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.warmup_steps > self.total_steps {
            return fail("warmup_steps exceeds total_steps");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail("gamma must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return fail("eta must be in [0, 1]");
        }
        if self.replay_ratio < 0.0 || !self.replay_ratio.is_finite() {
            return fail("replay_ratio must be non-negative");
        }
        if self.capacity == 0 {
            return fail("capacity must be positive");
        }
        if self.projection_dim == 0 {
            return fail("projection_dim must be >= 1");
        }
        if self.root_budget == 0 || self.predecessor_budget == 0 {
            return fail("sweep budgets must be >= 1");
        }
        if self.kappa <= 0.0 {
            return fail("kappa must be positive");
        }
        if !(0.0..=1.0).contains(&self.per_alpha) || !(0.0..=1.0).contains(&self.per_beta0) {
            return fail("per_alpha and per_beta0 must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.ebu_beta) {
            return fail("ebu_beta must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.eval_random_prob) {
            return fail("eval_random_prob must be in [0, 1]");
        }
        if self.learning_rate <= 0.0 {
            return fail("learning_rate must be positive");
        }
        if self.eval_interval == 0 || self.eval_episodes == 0 {
            return fail("eval settings must be positive");
        }
        if let LearnerSpec::Mlp { layers } = &self.learner {
            if layers.is_empty() || layers.contains(&0) {
                return fail("mlp layers must be non-empty positive sizes");
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
