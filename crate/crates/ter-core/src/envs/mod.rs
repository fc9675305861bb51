//! Benchmark environments with exact dynamics and a common interface:
//! the chain task, procedurally generated crossing gridworlds, and the
//! action-corruption wrapper.

pub mod grid;
pub mod nchain;
pub mod oracle;
pub mod stochastic;

use thiserror::Error;

pub use grid::{GridEnv, GridVariant};
pub use nchain::NChainEnv;
pub use oracle::{value_iteration, MdpModel, Outcome};
pub use stochastic::StochasticWrapper;

use crate::rng::Prng;
use crate::types::Observation;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("bad environment spec `{0}`: {1}")]
    BadSpec(String, String),
}

/// Result of one environment step. `terminal` flags task completion;
/// `timeout` flags the step budget expiring first. Never both.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub obs: Observation,
    pub reward: f64,
    pub terminal: bool,
    pub timeout: bool,
}

pub trait Environment {
    fn obs_dim(&self) -> usize;
    fn n_actions(&self) -> usize;

    /// Begin a fresh episode; procedural layouts regenerate here.
    fn reset(&mut self, rng: &mut Prng) -> Observation;

    /// Advance one step. Calling after terminal/timeout without reset
    /// is a contract violation (panics).
    fn step(&mut self, action: usize) -> EnvStep;

    /// Declared (worst, best) episode return used for min-max
    /// normalization; not necessarily tight.
    fn return_bounds(&self) -> (f64, f64);

    /// Step budget per episode, if the environment enforces one.
    fn max_episode_steps(&self) -> Option<u64> {
        None
    }

    /// Exact model when the state space is enumerable (chain always,
    /// grids only with a frozen layout).
    fn model(&self) -> Option<MdpModel> {
        None
    }
}

/// Parse an environment spec string.
///
/// Grammar:
///   `nchain:N=20[,maxsteps=200]`
///   `crossing:WxH[:simple|:lava][:stochastic=P][:nonterminal][:fixed]`
///
/// `fixed` freezes the procedural layout for the whole run (seeded by
/// `seed`) instead of regenerating per episode; it also enables the
/// exact model. `stochastic=P` wraps the result in action corruption.
pub fn make_env(spec: &str, seed: u64) -> Result<Box<dyn Environment>, EnvError> {
    let err = |msg: &str| EnvError::BadSpec(spec.to_string(), msg.to_string());
    let mut parts = spec.split(':');
    match parts.next() {
        Some("nchain") => {
            let mut n = 20usize;
            let mut maxsteps = None;
            if let Some(args) = parts.next() {
                for kv in args.split(',') {
                    match kv.split_once('=') {
                        Some(("N", v)) => {
                            n = v.parse().map_err(|_| err("bad N"))?;
                        }
                        Some(("maxsteps", v)) => {
                            maxsteps = Some(v.parse().map_err(|_| err("bad maxsteps"))?);
                        }
                        _ => return Err(err("unknown nchain argument")),
                    }
                }
            }
            if parts.next().is_some() {
                return Err(err("trailing spec segments"));
            }
            if n < 2 {
                return Err(err("N must be >= 2"));
            }
            Ok(Box::new(NChainEnv::new(n, maxsteps)))
        }
        Some("crossing") => {
            let dims = parts.next().ok_or_else(|| err("missing WxH"))?;
            let (w, h) = dims.split_once('x').ok_or_else(|| err("bad WxH"))?;
            let width: usize = w.parse().map_err(|_| err("bad width"))?;
            let height: usize = h.parse().map_err(|_| err("bad height"))?;
            if width < 5 || height < 5 {
                return Err(err("crossing needs at least 5x5"));
            }
            let mut variant = GridVariant::SimpleCrossing;
            let mut stochastic = None;
            let mut nonterminal = false;
            let mut fixed = false;
            for seg in parts {
                match seg {
                    "simple" => variant = GridVariant::SimpleCrossing,
                    "lava" => variant = GridVariant::LavaCrossing,
                    "nonterminal" => nonterminal = true,
                    "fixed" => fixed = true,
                    _ => {
                        if let Some(p) = seg.strip_prefix("stochastic=") {
                            let p: f64 = p.parse().map_err(|_| err("bad stochastic prob"))?;
                            if !(0.0..=1.0).contains(&p) {
                                return Err(err("stochastic prob outside [0, 1]"));
                            }
                            stochastic = Some(p);
                        } else {
                            return Err(err("unknown crossing option"));
                        }
                    }
                }
            }
            let env = GridEnv::new(width, height, variant, nonterminal, fixed, seed);
            let boxed: Box<dyn Environment> = match stochastic {
                Some(p) => Box::new(StochasticWrapper::new(env, p)),
                None => Box::new(env),
            };
            Ok(boxed)
        }
        _ => Err(err("unknown environment kind")),
    }
}
