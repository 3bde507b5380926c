//! Random generators: Boltzmann trees at x ≤ ρ, exact-size trees, pointed
//! and limit objects, biased G-objects and Gibbs partitions.

mod boltzmann;
mod exact;
mod gibbs;
mod limits;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::powerseries::SeriesError;
use crate::species::{EvalError, SpeciesError};

pub use boltzmann::{draw_g, draw_g_bar, draw_g_hat, gamma_s, BoltzmannSampler, CriticalSampler, MarkedG};
pub use exact::{exact_size_sample, ExactMethod, ExactTables};
pub use gibbs::{extract_remainder, gibbs_component_sizes, gibbs_sample, GibbsMethod, GibbsSampler};
pub use limits::{
    gamma_s_pointed, sample_limit_trimmed, LimitKind, LimitSample, PointedSample,
};

/// Default bound on vertices generated by one Boltzmann run.
pub const GROWTH_BUDGET: u64 = 50_000_000;
/// Default bound on rejection attempts.
pub const ATTEMPT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("no structure of size {n}: sizes live on n ≡ 1 mod {span}")]
    Lattice { n: usize, span: usize },
    #[error("size {n} exceeds the table size {max}")]
    TableTooSmall { n: usize, max: usize },
    #[error("growth exceeded {0} vertices")]
    GrowthBudget(u64),
    #[error("no acceptance after {0} attempts")]
    AttemptBudget(u64),
    #[error("method {0} is not available for this species")]
    Unsupported(&'static str),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Species(#[from] SpeciesError),
}

/// The generator used throughout: ChaCha with 8 rounds.
pub type SampleRng = ChaCha8Rng;

/// A (seed, stream) pair; equal pairs reproduce identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> SampleRng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_reproduce_and_differ() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7, 3).rng(), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7, 3).rng(), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7, 4).rng(), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
