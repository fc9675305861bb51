//! Uniform experience replay: i.i.d. draws over live transitions.

use rand::Rng;
use thiserror::Error;

use crate::rng::Prng;
use crate::types::TransitionStore;

#[derive(Debug, Error)]
pub enum UerError {
    #[error("cannot draw a uniform batch: no live transitions")]
    Empty,
}

/// Sample `batch_size` arena indices uniformly with replacement from
/// the non-expired portion of the store.
pub fn uer_sample(
    store: &TransitionStore,
    batch_size: usize,
    rng: &mut Prng,
) -> Result<Vec<usize>, UerError> {
    assert!(batch_size >= 1);
    let live = store.live_indices();
    if live.is_empty() {
        return Err(UerError::Empty);
    }
    Ok((0..batch_size)
        .map(|_| live[rng.gen_range(0..live.len())])
        .collect())
}
