//! The training loops: online environment interaction and the offline
//! fixed-dataset mode, both driving the configured sampler.

use rand::Rng;
use thiserror::Error;

use crate::baselines::{uer_sample, DiscorModel, EpisodeBuffer, PerSampler};
use crate::config::{ExperimentConfig, LearnerSpec, SamplerKind};
use crate::envs::{make_env, value_iteration, EnvError, Environment, MdpModel};
use crate::graph::{GraphError, PredecessorMode, TopologicalGraph};
use crate::hashing::ProjectionMatrix;
use crate::harness::eval::evaluate;
use crate::harness::record::RunRecord;
use crate::qlearn::{
    select_action, sync_target, EpsilonSchedule, MlpQ, OptimizerKind, QFunction, TabularQ, TdMode,
};
use crate::rng::{stream_rng, Prng, Stream};
use crate::sweep::{mixed_batch, RootsMode, SweepBudgets, SweepState};
use crate::types::{StoreError, Transition, TransitionStore};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("offline dataset is empty")]
    EmptyDataset,
}

/// Everything one run owns: environment, buffers, learner, and the RNG
/// streams. Streams are separate per subsystem so toggling one
/// component does not perturb the others' draws.
pub struct Trainer {
    pub cfg: ExperimentConfig,
    env: Box<dyn Environment>,
    eval_env: Box<dyn Environment>,
    phi: ProjectionMatrix,
    store: TransitionStore,
    graph: TopologicalGraph,
    sweep: SweepState,
    budgets: SweepBudgets,
    per: PerSampler,
    ebu: EpisodeBuffer,
    discor: Option<DiscorModel>,
    pub q: QFunction,
    target: Option<QFunction>,
    td_mode: TdMode,
    model: Option<MdpModel>,
    qstar: Option<Vec<Vec<f64>>>,
    rng_env: Prng,
    rng_expl: Prng,
    rng_sampler: Prng,
    rng_eval: Prng,
    pub updates: u64,
    pub starvation: u64,
    batch_q_sum: f64,
    batch_q_count: u64,
    planned_updates: u64,
}

fn make_learner(
    cfg: &ExperimentConfig,
    phi: &ProjectionMatrix,
    obs_dim: usize,
    n_actions: usize,
    rng_init: &mut Prng,
) -> QFunction {
    match &cfg.learner {
        LearnerSpec::Tabular => {
            QFunction::Tabular(TabularQ::new(phi.clone(), n_actions, cfg.learning_rate))
        }
        LearnerSpec::Mlp { layers } => QFunction::Mlp(MlpQ::new(
            obs_dim,
            layers,
            n_actions,
            cfg.learning_rate,
            OptimizerKind::Adam,
            rng_init,
        )),
    }
}

impl Trainer {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, TrainError> {
        let env = make_env(&cfg.env, cfg.seed)?;
        let eval_env = make_env(&cfg.env, cfg.seed)?;
        let mut proj_rng = stream_rng(cfg.seed, Stream::Projection);
        let phi = ProjectionMatrix::new(proj_rng.gen(), env.obs_dim(), cfg.projection_dim);
        let mut rng_init = stream_rng(cfg.seed, Stream::Init);
        let q = make_learner(&cfg, &phi, env.obs_dim(), env.n_actions(), &mut rng_init);
        let target = (cfg.target_update_interval > 0).then(|| q.clone());
        let discor = (cfg.sampler == SamplerKind::Discor).then(|| {
            let delta = make_learner(&cfg, &phi, env.obs_dim(), env.n_actions(), &mut rng_init);
            DiscorModel::new(zeroed(delta)).with_normalization(cfg.discor_normalize)
        });
        let model = env.model();
        let qstar = model
            .as_ref()
            .and_then(|m| value_iteration(m, cfg.gamma).ok());
        let budgets = SweepBudgets {
            roots: cfg.root_budget,
            predecessors: cfg.predecessor_budget,
            per_edge: (cfg.per_edge_budget > 0).then_some(cfg.per_edge_budget),
            mode: if cfg.stochastic_pred_weighting {
                PredecessorMode::VisitationWeighted
            } else {
                PredecessorMode::Uniform
            },
        };
        let roots_mode = if cfg.pseudo_terminal_roots {
            RootsMode::PseudoTerminal { kappa: cfg.kappa }
        } else {
            RootsMode::Terminal
        };
        let planned_updates =
            (cfg.replay_ratio * (cfg.total_steps - cfg.warmup_steps) as f64).floor() as u64;
        Ok(Self {
            store: TransitionStore::new(cfg.capacity),
            graph: TopologicalGraph::new(),
            sweep: SweepState::new(roots_mode),
            budgets,
            per: PerSampler::new(cfg.capacity as usize, cfg.per_alpha, cfg.per_beta0),
            ebu: EpisodeBuffer::new(cfg.ebu_beta, cfg.ebu_include_timeout),
            discor,
            td_mode: if cfg.double_dqn {
                TdMode::Double
            } else {
                TdMode::VanillaMax
            },
            model,
            qstar,
            rng_env: stream_rng(cfg.seed, Stream::Env),
            rng_expl: stream_rng(cfg.seed, Stream::Exploration),
            rng_sampler: stream_rng(cfg.seed, Stream::Sampler),
            rng_eval: stream_rng(cfg.seed, Stream::Eval),
            updates: 0,
            starvation: 0,
            batch_q_sum: 0.0,
            batch_q_count: 0,
            planned_updates,
            q,
            target,
            phi,
            env,
            eval_env,
            cfg,
        })
    }

    /// Online Q-learning: act, store, insert into the graph, and run
    /// `replay_ratio` updates per post-warmup step.
    pub fn train(&mut self) -> Result<Vec<RunRecord>, TrainError> {
        let schedule = EpsilonSchedule {
            start: self.cfg.eps_start,
            end: self.cfg.eps_end,
            decay_steps: self.cfg.eps_decay_steps,
        };
        let mut records = Vec::new();
        let mut obs = self.env.reset(&mut self.rng_env);
        let mut episode_return = 0.0;
        let mut disc = 1.0;
        self.note_visit(&obs, 0.0)?;
        let mut update_debt = 0.0f64;
        for step in 1..=self.cfg.total_steps {
            let eps = if step <= self.cfg.warmup_steps {
                1.0
            } else {
                schedule.value(step - self.cfg.warmup_steps - 1)
            };
            let a = select_action(&self.q, &obs, eps, &mut self.rng_expl);
            let s = self.env.step(a);
            let t = Transition {
                state: obs,
                action: a,
                reward: s.reward,
                next_state: s.obs.clone(),
                terminal: s.terminal,
                timeout: s.timeout,
                insert_step: step,
            };
            self.insert(&t)?;
            episode_return += if self.cfg.discounted_vertex_returns {
                disc * s.reward
            } else {
                s.reward
            };
            disc *= self.cfg.gamma;
            self.note_visit(&s.obs, episode_return)?;
            if s.terminal || s.timeout {
                obs = self.env.reset(&mut self.rng_env);
                episode_return = 0.0;
                disc = 1.0;
                self.note_visit(&obs, 0.0)?;
            } else {
                obs = s.obs;
            }
            if self.graph.transition_count() as u64 > 2 * self.cfg.capacity {
                self.graph.full_prune(&self.store);
            }
            if step > self.cfg.warmup_steps {
                update_debt += self.cfg.replay_ratio;
                while update_debt >= 1.0 {
                    self.do_update();
                    update_debt -= 1.0;
                }
            }
            if step % self.cfg.eval_interval == 0 {
                records.push(self.eval_record(step));
            }
        }
        Ok(records)
    }

    /// Fixed-dataset mode: load every episode, then run `n_updates`
    /// sampler-driven updates with an evaluation after each one.
    /// `env_step` in the emitted rows counts updates.
    pub fn train_offline(
        &mut self,
        dataset: &[Vec<Transition>],
        n_updates: u64,
    ) -> Result<Vec<RunRecord>, TrainError> {
        if dataset.iter().all(|e| e.is_empty()) {
            return Err(TrainError::EmptyDataset);
        }
        self.planned_updates = n_updates;
        for episode in dataset {
            let mut episode_return = 0.0;
            let mut disc = 1.0;
            if let Some(first) = episode.first() {
                self.note_visit(&first.state, 0.0)?;
            }
            for t in episode {
                let mut t = t.clone();
                t.insert_step = 0;
                self.insert(&t)?;
                episode_return += if self.cfg.discounted_vertex_returns {
                    disc * t.reward
                } else {
                    t.reward
                };
                disc *= self.cfg.gamma;
                self.note_visit(&t.next_state, episode_return)?;
            }
        }
        let mut records = Vec::with_capacity(n_updates as usize);
        for u in 1..=n_updates {
            self.do_update();
            records.push(self.eval_record(u));
        }
        Ok(records)
    }

    fn insert(&mut self, t: &Transition) -> Result<(), TrainError> {
        let idx = self.store.append(t.clone())?;
        self.graph.insert_transition(idx, t, &self.phi)?;
        self.per.on_insert(idx);
        self.ebu.on_insert(idx, t.terminal, t.timeout);
        Ok(())
    }

    fn note_visit(&mut self, obs: &crate::types::Observation, g: f64) -> Result<(), TrainError> {
        let key = self.phi.project(obs).map_err(GraphError::from)?;
        self.graph.update_vertex_return(&key, g);
        Ok(())
    }

    /// One gradient/TD update with the configured sampler. Counts only
    /// when a batch could actually be drawn.
    pub fn do_update(&mut self) {
        // Anneal the PER IS exponent to 1 over the first quarter of the
        // planned updates.
        if self.planned_updates > 0 {
            let horizon = (self.planned_updates as f64 / 4.0).max(1.0);
            let frac = (self.updates as f64 / horizon).min(1.0);
            self.per
                .set_beta(self.cfg.per_beta0 + (1.0 - self.cfg.per_beta0) * frac);
        }
        let b = self.cfg.batch_size;
        match self.cfg.sampler {
            SamplerKind::Ter => {
                match self.sweep.next_batch(
                    &mut self.graph,
                    &self.store,
                    b,
                    &self.budgets,
                    &mut self.rng_sampler,
                ) {
                    Ok(indices) => {
                        let w = vec![1.0; indices.len()];
                        self.apply_td(&indices, &w);
                    }
                    Err(_) => {
                        // Starved sweep: keep learning alive on a
                        // uniform batch.
                        self.starvation += 1;
                        if let Ok(indices) = uer_sample(&self.store, b, &mut self.rng_sampler) {
                            let w = vec![1.0; indices.len()];
                            self.apply_td(&indices, &w);
                        }
                    }
                }
            }
            SamplerKind::TerMixed => {
                let mb = mixed_batch(
                    &mut self.sweep,
                    &mut self.graph,
                    &self.store,
                    &mut self.per,
                    self.cfg.eta,
                    b,
                    &self.budgets,
                    &mut self.rng_sampler,
                );
                if mb.ter_starved {
                    self.starvation += 1;
                }
                if mb.indices.is_empty() {
                    return;
                }
                let deltas = self.apply_td(&mb.indices, &mb.weights);
                let per_members: Vec<(usize, f64)> = mb
                    .indices
                    .iter()
                    .zip(&deltas)
                    .zip(&mb.sources)
                    .filter(|&(_, src)| *src == crate::sweep::BatchSource::Per)
                    .map(|((&i, &d), _)| (i, d))
                    .collect();
                let (idx, d): (Vec<usize>, Vec<f64>) = per_members.into_iter().unzip();
                self.per.update_priorities(&idx, &d);
            }
            SamplerKind::Uer => {
                if let Ok(indices) = uer_sample(&self.store, b, &mut self.rng_sampler) {
                    let w = vec![1.0; indices.len()];
                    self.apply_td(&indices, &w);
                }
            }
            SamplerKind::Per => {
                if let Ok((indices, weights)) =
                    self.per.sample(&self.store, b, &mut self.rng_sampler)
                {
                    let deltas = self.apply_td(&indices, &weights);
                    self.per.update_priorities(&indices, &deltas);
                }
            }
            SamplerKind::Ebu => {
                let q_target = self.target.as_ref().unwrap_or(&self.q);
                if let Ok((indices, targets)) = self.ebu.ebu_batch(
                    &self.store,
                    q_target,
                    self.cfg.gamma,
                    &mut self.rng_sampler,
                ) {
                    let batch: Vec<(&Transition, f64, f64)> = indices
                        .iter()
                        .zip(&targets)
                        .map(|(&i, &y)| (self.store.get(i).expect("live index"), y, 1.0))
                        .collect();
                    for (t, _, _) in &batch {
                        self.batch_q_sum += self.q.q_value(&t.state, t.action);
                        self.batch_q_count += 1;
                    }
                    self.q.update_toward_targets(&batch);
                    self.updates += 1;
                    self.maybe_sync();
                }
            }
            SamplerKind::Discor => {
                if let Ok(indices) = uer_sample(&self.store, b, &mut self.rng_sampler) {
                    let batch: Vec<&Transition> = indices
                        .iter()
                        .map(|&i| self.store.get(i).expect("live index"))
                        .collect();
                    let em = self.discor.as_mut().expect("discor model");
                    let weights = em.weights(&self.q, &batch, self.cfg.gamma);
                    let deltas = self.apply_td(&indices, &weights);
                    let batch: Vec<&Transition> = indices
                        .iter()
                        .map(|&i| self.store.get(i).expect("live index"))
                        .collect();
                    let em = self.discor.as_mut().expect("discor model");
                    em.train(&self.q, &batch, &deltas, self.cfg.gamma);
                }
            }
        }
    }

    /// TD step on arena indices with importance weights; logs mean Q
    /// over the batch, counts the update, and handles target syncs.
    fn apply_td(&mut self, indices: &[usize], weights: &[f64]) -> Vec<f64> {
        let batch: Vec<(&Transition, f64)> = indices
            .iter()
            .zip(weights)
            .map(|(&i, &w)| (self.store.get(i).expect("live index"), w))
            .collect();
        for (t, _) in &batch {
            self.batch_q_sum += self.q.q_value(&t.state, t.action);
            self.batch_q_count += 1;
        }
        let deltas = self
            .q
            .td_update(self.target.as_ref(), &batch, self.cfg.gamma, self.td_mode);
        self.updates += 1;
        self.maybe_sync();
        deltas
    }

    fn maybe_sync(&mut self) {
        let interval = self.cfg.target_update_interval;
        if interval > 0 && self.updates.is_multiple_of(interval) {
            sync_target(&self.q, self.target.as_mut().expect("target net"));
            if let Some(em) = self.discor.as_mut() {
                em.sync();
            }
        }
    }

    fn eval_record(&mut self, env_step: u64) -> RunRecord {
        let mean_return = evaluate(
            &self.q,
            self.eval_env.as_mut(),
            self.cfg.eval_episodes,
            self.cfg.eval_random_prob,
            &mut self.rng_eval,
        );
        let mean_q = if self.batch_q_count > 0 {
            self.batch_q_sum / self.batch_q_count as f64
        } else {
            0.0
        };
        self.batch_q_sum = 0.0;
        self.batch_q_count = 0;
        let (_, r_max) = self.env.return_bounds();
        let record = RunRecord {
            env_step,
            mean_return,
            mean_q,
            q_diff: (mean_q - r_max) / r_max,
            value_error: self.value_error(),
            updates: self.updates,
            starvation: self.starvation,
            seed: self.cfg.seed,
        };
        record.assert_finite();
        record
    }

    /// Mean |Q - Q*| over all non-terminal state-action pairs, or -1
    /// when no exact model is available.
    pub fn value_error(&self) -> f64 {
        let (Some(model), Some(qstar)) = (&self.model, &self.qstar) else {
            return -1.0;
        };
        let mut sum = 0.0;
        let mut n = 0u64;
        for (sid, obs) in model.observations.iter().enumerate() {
            if model.terminal_states.contains(&sid) {
                continue;
            }
            let qs = self.q.q_values(obs);
            for a in 0..model.n_actions {
                sum += (qs[a] - qstar[sid][a]).abs();
                n += 1;
            }
        }
        sum / n as f64
    }
}

/// Roll random-action episodes for the offline mode; episodes end on
/// the environment's own terminal/timeout, with a hard cap as a safety
/// net (cut episodes are flagged as timeouts).
pub fn collect_random_episodes(
    env: &mut dyn Environment,
    n_episodes: usize,
    cap: u64,
    rng: &mut Prng,
) -> Vec<Vec<Transition>> {
    let mut dataset = Vec::with_capacity(n_episodes);
    for _ in 0..n_episodes {
        let mut obs = env.reset(rng);
        let mut episode = Vec::new();
        for k in 0..cap {
            let a = rng.gen_range(0..env.n_actions());
            let s = env.step(a);
            let mut t = Transition {
                state: obs,
                action: a,
                reward: s.reward,
                next_state: s.obs.clone(),
                terminal: s.terminal,
                timeout: s.timeout,
                insert_step: 0,
            };
            obs = s.obs;
            let done = s.terminal || s.timeout;
            if k == cap - 1 && !done {
                t.timeout = true;
            }
            episode.push(t);
            if done {
                break;
            }
        }
        dataset.push(episode);
    }
    dataset
}

/// Convenience wrapper: build a trainer and run the online loop.
pub fn train(cfg: ExperimentConfig) -> Result<Vec<RunRecord>, TrainError> {
    Trainer::new(cfg)?.train()
}

fn zeroed(q: QFunction) -> QFunction {
    // The error model starts at zero estimated error.
    match q {
        QFunction::Tabular(t) => QFunction::Tabular(t),
        QFunction::Mlp(mut m) => {
            m.set_params(vec![0.0; m.num_params()]);
            QFunction::Mlp(m)
        }
    }
}
