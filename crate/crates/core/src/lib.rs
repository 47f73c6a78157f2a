//! Probabilistic model checking of unbounded until on discrete-time Markov
//! chains.
//!
//! Three engines share one model type:
//!
//! * [`nmc`]: exact numerical solution by Gauss-Seidel iteration.
//! * [`smc`]: statistical estimation from sampled traces with a
//!   Chernoff-Hoeffding sample budget.
//! * [`bouquet`]: sampling that resolves traces exactly once they enter a
//!   small closed region of the chain, with reusable annotations.

pub mod bouquet;
pub mod dtmc;
pub mod formula;
pub mod generate;
pub mod nmc;
pub mod smc;
pub mod store;

pub use bouquet::{
    bouquet_estimate, bouquet_samples, default_k, find_flowerhead, flower_nmc, get_flower, is_flower, pre_annotate,
    reach_bounded, AnnotationStore, BouquetError, BouquetParams, Counters, Flower, FlowerMark, ReachOutcome,
};
pub use dtmc::{parse_model, Chain, Dtmc, Metered, ModelError, Row, StateSet, Trace, Violation};
pub use formula::{
    eval_state, eval_trace, parse_formula, FormulaError, FormulaFingerprint, StateFormula, TraceVerdict, UntilQuery,
};
pub use generate::{generate_random_dtmc, GeneratorConfig, GeneratorError, PetalConfig};
pub use nmc::{nmc_single, prob0, sat_set, solve_until, NmcError, NmcOptions, ProbVector};
pub use smc::{
    estimate, estimate_with_workers, required_samples, sample_trace, simulate_trace, trace_rng, EstimationResult,
    SamplingPlan, SmcError, Tally, DEFAULT_MAX_PATH_LENGTH,
};
pub use store::{canonical_text, load_annotations, save_annotations, write_model, ModelFingerprint, StoreError};
