//! Action-corruption wrapper: each step, the agent's action is replaced
//! by a uniformly random one with probability p.

use rand::{Rng, SeedableRng};

use super::oracle::{MdpModel, Outcome};
use super::{EnvStep, Environment};
use crate::rng::Prng;
use crate::types::Observation;

/// Wraps any environment with i.i.d. action corruption. Corruption
/// draws come from a dedicated RNG forked off the episode reset stream
/// so p = 0 leaves the inner environment's behaviour bit-identical.
#[derive(Debug)]
pub struct StochasticWrapper<E: Environment> {
    inner: E,
    p: f64,
    rng: Prng,
}

impl<E: Environment> StochasticWrapper<E> {
    pub fn new(inner: E, p: f64) -> Self {
        assert!((0.0..=1.0).contains(&p));
        Self {
            inner,
            p,
            rng: Prng::seed_from_u64(0),
        }
    }
}

impl<E: Environment> Environment for StochasticWrapper<E> {
    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }

    fn n_actions(&self) -> usize {
        self.inner.n_actions()
    }

    fn reset(&mut self, rng: &mut Prng) -> Observation {
        if self.p > 0.0 {
            self.rng = Prng::seed_from_u64(rng.gen());
        }
        self.inner.reset(rng)
    }

    fn step(&mut self, action: usize) -> EnvStep {
        let executed = if self.p > 0.0 && self.rng.gen::<f64>() < self.p {
            self.rng.gen_range(0..self.inner.n_actions())
        } else {
            action
        };
        self.inner.step(executed)
    }

    fn return_bounds(&self) -> (f64, f64) {
        self.inner.return_bounds()
    }

    fn max_episode_steps(&self) -> Option<u64> {
        self.inner.max_episode_steps()
    }

    /// Inner model with each action's outcome distribution mixed with
    /// the uniform-over-actions corruption.
    fn model(&self) -> Option<MdpModel> {
        let mut model = self.inner.model()?;
        let n_actions = model.n_actions;
        let keep = 1.0 - self.p + self.p / n_actions as f64;
        let leak = self.p / n_actions as f64;
        for s in 0..model.n_states() {
            if model.terminal_states.contains(&s) {
                continue;
            }
            let rows = model.transitions[s].clone();
            for a in 0..n_actions {
                let mut mixed: Vec<Outcome> = Vec::new();
                for (b, row) in rows.iter().enumerate() {
                    let w = if a == b { keep } else { leak };
                    if w == 0.0 {
                        continue;
                    }
                    for o in row {
                        mixed.push(Outcome {
                            prob: w * o.prob,
                            ..*o
                        });
                    }
                }
                model.transitions[s][a] = mixed;
            }
        }
        Some(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::nchain::{NChainEnv, ACTION_FORWARD};
    use crate::envs::value_iteration;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn p_zero_is_bit_identical_passthrough() {
        let mut rng_a = stream_rng(5, Stream::Env);
        let mut rng_b = stream_rng(5, Stream::Env);
        let mut plain = NChainEnv::new(10, Some(50));
        let mut wrapped = StochasticWrapper::new(NChainEnv::new(10, Some(50)), 0.0);
        for _ in 0..20 {
            let oa = plain.reset(&mut rng_a);
            let ob = wrapped.reset(&mut rng_b);
            assert_eq!(oa, ob);
            loop {
                let a = rng_a.gen_range(0..2);
                let b = rng_b.gen_range(0..2);
                assert_eq!(a, b);
                let sa = plain.step(a);
                let sb = wrapped.step(b);
                assert_eq!(sa, sb);
                if sa.terminal || sa.timeout {
                    break;
                }
            }
        }
    }

    #[test]
    fn corruption_rate_matches_p() {
        // On the chain, always command forward; count effective
        // backward moves. Backward executes only via corruption picking
        // action 0, so the rate should be p / 2.
        let n = 200_000u64;
        let mut env = StochasticWrapper::new(NChainEnv::new(1000, None), 0.1);
        let mut rng = stream_rng(6, Stream::Env);
        let mut backward = 0u64;
        env.reset(&mut rng);
        let mut pos = 0usize;
        for _ in 0..n {
            let s = env.step(ACTION_FORWARD);
            let new_pos = s.obs.as_slice().iter().position(|&x| x == 1.0).unwrap();
            if new_pos != pos + 1 {
                backward += 1;
            }
            if s.terminal || s.timeout {
                env.reset(&mut rng);
                pos = 0;
            } else {
                pos = new_pos;
            }
        }
        let rate = backward as f64 / n as f64;
        assert!((rate - 0.05).abs() < 0.005, "rate = {rate}");
    }

    #[test]
    fn model_mixes_outcomes_and_lowers_values() {
        let env = StochasticWrapper::new(NChainEnv::new(6, None), 0.2);
        let model = env.model().unwrap();
        model.validate();
        let q_noisy = value_iteration(&model, 0.9).unwrap();
        let q_clean = value_iteration(&env.inner.model().unwrap(), 0.9).unwrap();
        // Corruption can only delay the reward here.
        for s in 0..5 {
            assert!(q_noisy[s][ACTION_FORWARD] <= q_clean[s][ACTION_FORWARD] + 1e-12);
        }
        assert!(q_noisy[4][ACTION_FORWARD] < q_clean[4][ACTION_FORWARD]);
    }
}
