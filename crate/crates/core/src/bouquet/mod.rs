//! The bouquet engine: trace sampling that stops at *flowers* and solves
//! them exactly.
//!
//! A state `s` roots a flower when `reach*(s)`, the set made of `s` and
//! every state reachable from it, has at most `k` members. The induced
//! sub-chain on that set is closed under transitions, so it is a DTMC in its
//! own right and numerical checking on it gives the exact until probability
//! at `s`. Flower status is monotone along paths (`reach*` only shrinks), which
//! is what lets [`find_flowerhead`] binary-search a trace segment.
//!
//! Structural annotations (flower or not) are formula-agnostic and live in an
//! [`AnnotationStore`] together with per-formula caches of exact values, so
//! later queries on the same chain reuse earlier work.

mod annotations;
mod engine;
mod flower;
mod preannotate;
mod reach;

use thiserror::Error;

use crate::formula::FormulaError;
use crate::nmc::{NmcError, NmcOptions};
use crate::smc::{required_samples, SmcError, DEFAULT_MAX_PATH_LENGTH};

pub use annotations::{AnnotationStore, Counters, FlowerMark};
pub use engine::bouquet_estimate;
pub use flower::{flower_nmc, get_flower, Flower};
pub use preannotate::pre_annotate;
pub use reach::{find_flowerhead, is_flower, reach_bounded, ReachOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BouquetError {
    #[error("annotation store was built for k={store}, run uses k={run}")]
    KMismatch { store: usize, run: usize },
    #[error("state {0} is not a flower root")]
    NotAFlower(usize),
    #[error("flower threshold k must be at least 1")]
    ZeroK,
    #[error("flower-search probability must lie in [0, 1], got {0}")]
    SearchProbability(f64),
    #[error("the bouquet engine handles unbounded until only")]
    BoundedQuery,
    #[error("state {state} out of range for {n} states")]
    StateOutOfRange { state: usize, n: usize },
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Nmc(#[from] NmcError),
    #[error(transparent)]
    Sampling(#[from] SmcError),
}

/// `max(2, floor(sqrt(n)))`.
pub fn default_k(n: usize) -> usize {
    n.isqrt().max(2)
}

/// Samples used by the bouquet engine for an SMC budget of `smc_samples`:
/// `ceil(0.7 * smc_samples)`.
pub fn bouquet_samples(smc_samples: usize) -> usize {
    (smc_samples * 7).div_ceil(10)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BouquetParams {
    pub k: usize,
    /// Probability of running a flower search at an unannotated state.
    pub r_prob: f64,
    pub samples: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub max_path_length: usize,
    pub seed: u64,
    pub nmc: NmcOptions,
}

impl BouquetParams {
    /// Defaults for a chain of `n` states: `k = default_k(n)`, `r_prob = 0.01`
    /// and 0.7 of the Chernoff-Hoeffding sample count.
    pub fn new(n: usize, epsilon: f64, delta: f64, seed: u64) -> Result<Self, BouquetError> {
        Ok(BouquetParams {
            k: default_k(n),
            r_prob: 0.01,
            samples: bouquet_samples(required_samples(epsilon, delta)?),
            epsilon,
            delta,
            max_path_length: DEFAULT_MAX_PATH_LENGTH,
            seed,
            nmc: NmcOptions::default(),
        })
    }

    pub(crate) fn check(&self) -> Result<(), BouquetError> {
        required_samples(self.epsilon, self.delta)?;
        if self.k == 0 {
            return Err(BouquetError::ZeroK);
        }
        if !(0.0..=1.0).contains(&self.r_prob) {
            return Err(BouquetError::SearchProbability(self.r_prob));
        }
        if self.samples == 0 {
            return Err(SmcError::NoSamples.into());
        }
        if self.max_path_length == 0 {
            return Err(SmcError::NoPathLength.into());
        }
        Ok(())
    }
}
