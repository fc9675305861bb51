//! Greedy-policy evaluation with min-max return normalization.

use rand::Rng;

use crate::envs::Environment;
use crate::qlearn::{select_action, QFunction};
use crate::rng::Prng;

/// Fallback episode cap for environments without a step budget.
const DEFAULT_EVAL_CAP: u64 = 1_000;

/// Mean normalized return of the greedy policy (random action with
/// probability `random_prob`) over `episodes` episodes. Returns are
/// mapped to [0, 1] via the environment's declared bounds and clamped.
pub fn evaluate(
    q: &QFunction,
    env: &mut dyn Environment,
    episodes: usize,
    random_prob: f64,
    rng: &mut Prng,
) -> f64 {
    assert!(episodes > 0);
    let (g_min, g_max) = env.return_bounds();
    let span = g_max - g_min;
    assert!(span > 0.0, "degenerate return bounds");
    let cap = env.max_episode_steps().unwrap_or(DEFAULT_EVAL_CAP);
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut obs = env.reset(rng);
        let mut ret = 0.0;
        for _ in 0..cap {
            let a = if random_prob > 0.0 && rng.gen::<f64>() < random_prob {
                rng.gen_range(0..env.n_actions())
            } else {
                select_action(q, &obs, 0.0, rng)
            };
            let s = env.step(a);
            ret += s.reward;
            obs = s.obs;
            if s.terminal || s.timeout {
                break;
            }
        }
        total += ((ret - g_min) / span).clamp(0.0, 1.0);
    }
    total / episodes as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{make_env, value_iteration, GridEnv, GridVariant};
    use crate::hashing::ProjectionMatrix;
    use crate::qlearn::TabularQ;
    use crate::rng::{stream_rng, Stream};
    use crate::types::{Observation, Transition};

    /// Load an exact model's Q* into a tabular function.
    fn oracle_q(env: &dyn Environment, gamma: f64, seed: u64) -> QFunction {
        let model = env.model().unwrap();
        let qstar = value_iteration(&model, gamma).unwrap();
        let phi = ProjectionMatrix::new(seed, env.obs_dim(), 3);
        let mut q = QFunction::Tabular(TabularQ::new(phi, env.n_actions(), 1.0));
        for (sid, obs) in model.observations.iter().enumerate() {
            if model.terminal_states.contains(&sid) {
                continue;
            }
            for a in 0..model.n_actions {
                let t = Transition {
                    state: obs.clone(),
                    action: a,
                    reward: qstar[sid][a],
                    next_state: Observation(vec![0.0; env.obs_dim()]),
                    terminal: true,
                    timeout: false,
                    insert_step: 0,
                };
                q.update_toward_targets(&[(&t, qstar[sid][a], 1.0)]);
            }
        }
        q
    }

    #[test]
    fn oracle_policy_on_chain_scores_one() {
        let mut env = make_env("nchain:N=20", 0).unwrap();
        let q = oracle_q(env.as_ref(), 0.99, 42);
        let mut rng = stream_rng(0, Stream::Eval);
        let score = evaluate(&q, env.as_mut(), 10, 0.0, &mut rng);
        assert_eq!(score, 1.0);
    }

    #[test]
    fn zero_q_on_chain_ties_to_backward_and_scores_zero() {
        let mut env = make_env("nchain:N=20", 0).unwrap();
        let phi = ProjectionMatrix::new(1, 20, 3);
        let q = QFunction::Tabular(TabularQ::new(phi, 2, 1.0));
        let mut rng = stream_rng(1, Stream::Eval);
        // All-zero rows tie-break to action 0 (backward): stuck at the
        // start until the cap, return 0.
        let score = evaluate(&q, env.as_mut(), 3, 0.0, &mut rng);
        assert_eq!(score, 0.0);
    }

    #[test]
    fn random_q_near_random_policy_baseline_on_lava_grid() {
        let mut env = GridEnv::new(7, 7, GridVariant::LavaCrossing, false, false, 0);
        let mut rng = stream_rng(2, Stream::Eval);
        // Monte-Carlo random-policy baseline.
        let (g_min, g_max) = env.return_bounds();
        let mut baseline = 0.0;
        for _ in 0..1000 {
            env.reset(&mut rng);
            let mut ret = 0.0;
            loop {
                let s = env.step(rng.gen_range(0..3));
                ret += s.reward;
                if s.terminal || s.timeout {
                    break;
                }
            }
            baseline += ((ret - g_min) / (g_max - g_min)).clamp(0.0, 1.0);
        }
        baseline /= 1000.0;

        // Evaluation with 100% random actions must land close by.
        let phi = ProjectionMatrix::new(3, env.obs_dim(), 3);
        let q = QFunction::Tabular(TabularQ::new(phi, 3, 1.0));
        let score = evaluate(&q, &mut env, 500, 1.0, &mut rng);
        assert!(
            (score - baseline).abs() < 0.1,
            "score {score} vs baseline {baseline}"
        );
    }
}
