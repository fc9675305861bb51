//! Random-projection encoding of observations into compact, bit-exact
//! hash keys that serve as graph vertices.

use std::fmt;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::rng::Prng;
use crate::types::Observation;

#[derive(Debug, Error)]
pub enum HashingError {
    #[error("observation dimension {got} does not match projection input dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Vertex identity: the exact bit pattern of the projected components,
/// concatenated in component order. Equality means bit-identical
/// projected vectors; no rounding or bucketing is applied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(Box<[u64]>);

impl StateKey {
    pub fn from_bits(bits: Vec<u64>) -> Self {
        StateKey(bits.into_boxed_slice())
    }

    pub fn bits(&self) -> &[u64] {
        &self.0
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in self.0.iter() {
            write!(f, "{w:016x}")?;
        }
        Ok(())
    }
}

/// A fixed d x D matrix with entries drawn i.i.d. from Normal(0, 1/d).
///
/// Generated once per experiment from its own RNG stream and never
/// mutated: same (seed, input_dim, projected_dim) gives an identical
/// matrix and therefore identical keys for all inputs. The projection
/// is evaluated in f64 with a fixed row-major accumulation order, so
/// keys are bit-reproducible for a given platform's IEEE-754 arithmetic.
#[derive(Debug, Clone)]
pub struct ProjectionMatrix {
    rows: Vec<Vec<f64>>,
    input_dim: usize,
    projected_dim: usize,
    seed: u64,
}

impl ProjectionMatrix {
    pub fn new(seed: u64, input_dim: usize, projected_dim: usize) -> Self {
        assert!(projected_dim >= 1, "projected dimension must be >= 1");
        assert!(input_dim >= 1, "input dimension must be >= 1");
        let mut rng = Prng::seed_from_u64(seed);
        let dist = Normal::new(0.0, (1.0 / projected_dim as f64).sqrt()).unwrap();
        let rows = (0..projected_dim)
            .map(|_| (0..input_dim).map(|_| dist.sample(&mut rng)).collect())
            .collect();
        Self {
            rows,
            input_dim,
            projected_dim,
            seed,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn projected_dim(&self) -> usize {
        self.projected_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Project an observation to its vertex key (bit pattern of M s).
    pub fn project(&self, s: &Observation) -> Result<StateKey, HashingError> {
        if s.dim() != self.input_dim {
            return Err(HashingError::DimensionMismatch {
                expected: self.input_dim,
                got: s.dim(),
            });
        }
        let bits = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = 0.0f64;
                for (m, x) in row.iter().zip(s.as_slice()) {
                    acc += m * x;
                }
                acc.to_bits()
            })
            .collect();
        Ok(StateKey(bits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn zero_vector_projects_to_zero_bits() {
        let m = ProjectionMatrix::new(1, 5, 3);
        let key = m.project(&Observation(vec![0.0; 5])).unwrap();
        assert_eq!(key.bits(), &[0u64, 0, 0]);
    }

    #[test]
    fn projection_is_deterministic() {
        let m = ProjectionMatrix::new(42, 8, 3);
        let s = Observation(vec![0.5, -1.0, 2.0, 0.0, 3.25, -0.125, 7.0, 1.0]);
        assert_eq!(m.project(&s).unwrap(), m.project(&s).unwrap());
    }

    #[test]
    fn equal_seed_and_dims_give_equal_keys() {
        let a = ProjectionMatrix::new(9, 6, 3);
        let b = ProjectionMatrix::new(9, 6, 3);
        for i in 0..6 {
            let mut v = vec![0.0; 6];
            v[i] = 1.0;
            let s = Observation(v);
            assert_eq!(a.project(&s).unwrap(), b.project(&s).unwrap());
        }
    }

    #[test]
    fn one_hot_nchain_states_get_distinct_keys() {
        // One-hot states over N = 20 positions, d = 3: keys are the bit
        // patterns of distinct matrix columns, distinct w.p. 1.
        let m = ProjectionMatrix::new(3, 20, 3);
        let mut keys = HashSet::new();
        for i in 0..20 {
            let mut v = vec![0.0; 20];
            v[i] = 1.0;
            keys.insert(m.project(&Observation(v)).unwrap());
        }
        assert_eq!(keys.len(), 20);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let m = ProjectionMatrix::new(0, 4, 3);
        assert!(m.project(&Observation(vec![0.0; 5])).is_err());
    }
}
