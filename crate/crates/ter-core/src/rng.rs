//! Seed-derived RNG streams.
//!
//! Each subsystem gets its own stream so toggling one component (e.g. the
//! sampler) does not perturb environment layouts or exploration noise.

use rand::SeedableRng;

pub type Prng = rand_chacha::ChaCha8Rng;

/// Logical RNG streams derived from one experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Env = 1,
    Exploration = 2,
    Sampler = 3,
    Projection = 4,
    Init = 5,
    Eval = 6,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Deterministic per-stream RNG: same (seed, stream) always yields the
/// same generator state.
pub fn stream_rng(seed: u64, stream: Stream) -> Prng {
    Prng::seed_from_u64(splitmix64(seed ^ splitmix64(stream as u64)))
}
