//! Estimation-based statistical model checking.
//!
//! Every trace draws from its own ChaCha8 stream, selected by the trace
//! index under the plan's seed, so results do not depend on how traces are
//! split across workers.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dtmc::Chain;
use crate::formula::{FormulaError, ResolvedQuery, TraceVerdict, UntilQuery};

pub const DEFAULT_MAX_PATH_LENGTH: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmcError {
    #[error("epsilon and delta must lie in (0, 1), got epsilon={epsilon}, delta={delta}")]
    Accuracy { epsilon: f64, delta: f64 },
    #[error("sample count must be positive")]
    NoSamples,
    #[error("max path length must be positive")]
    NoPathLength,
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Smallest `N` with `N >= ln(2/delta) / (2 epsilon^2)`.
pub fn required_samples(epsilon: f64, delta: f64) -> Result<usize, SmcError> {
    let in_range = |x: f64| x > 0.0 && x < 1.0;
    if !in_range(epsilon) || !in_range(delta) {
        return Err(SmcError::Accuracy { epsilon, delta });
    }
    Ok(((2.0 / delta).ln() / (2.0 * epsilon * epsilon)).ceil() as usize)
}

/// Random source for trace `index` under `seed`.
pub fn trace_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    pub epsilon: f64,
    pub delta: f64,
    pub max_path_length: usize,
    pub samples: usize,
    pub seed: u64,
}

impl SamplingPlan {
    /// A plan sized by the Chernoff-Hoeffding bound.
    pub fn auto(epsilon: f64, delta: f64, seed: u64) -> Result<Self, SmcError> {
        Ok(SamplingPlan {
            epsilon,
            delta,
            max_path_length: DEFAULT_MAX_PATH_LENGTH,
            samples: required_samples(epsilon, delta)?,
            seed,
        })
    }

    pub fn with_samples(self, samples: usize) -> Self {
        SamplingPlan { samples, ..self }
    }

    pub fn with_max_path_length(self, max_path_length: usize) -> Self {
        SamplingPlan {
            max_path_length,
            ..self
        }
    }

    fn check(&self) -> Result<(), SmcError> {
        required_samples(self.epsilon, self.delta)?;
        if self.samples == 0 {
            return Err(SmcError::NoSamples);
        }
        if self.max_path_length == 0 {
            return Err(SmcError::NoPathLength);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub true_count: u64,
    pub false_count: u64,
    /// Traces cut at the path limit; they contribute 0.
    pub inconclusive: u64,
    pub flower_resolved: u64,
}

impl Tally {
    pub fn total(&self) -> u64 {
        self.true_count + self.false_count + self.inconclusive + self.flower_resolved
    }

    fn record(&mut self, verdict: TraceVerdict) {
        match verdict {
            TraceVerdict::True => self.true_count += 1,
            TraceVerdict::False => self.false_count += 1,
            TraceVerdict::Inconclusive => self.inconclusive += 1,
        }
    }

    fn merge(&mut self, other: Tally) {
        self.true_count += other.true_count;
        self.false_count += other.false_count;
        self.inconclusive += other.inconclusive;
        self.flower_resolved += other.flower_resolved;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub estimate: f64,
    pub samples_used: usize,
    pub tally: Tally,
    pub wall_time: Duration,
    /// Mean number of states visited per trace.
    pub mean_trace_length: f64,
    /// Mean stalk length (states up to and including the flower root) over
    /// flower-resolved traces.
    pub mean_stalk_length: Option<f64>,
    pub epsilon: f64,
    pub delta: f64,
}

/// Walks one trace from the initial state, calling `visit` on every state.
/// Returns the verdict and the number of states visited.
pub(crate) fn walk<C: Chain + ?Sized, R: Rng + ?Sized>(
    chain: &C,
    q: &ResolvedQuery,
    max_path_length: usize,
    rng: &mut R,
    mut visit: impl FnMut(usize),
) -> (TraceVerdict, usize) {
    let mut state = chain.model().initial();
    let mut len = 1;
    loop {
        visit(state);
        if let Some(verdict) = q.step(state, len - 1) {
            return (verdict, len);
        }
        if len >= max_path_length {
            return (TraceVerdict::Inconclusive, len);
        }
        state = chain.fetch(state).sample(rng);
        len += 1;
    }
}

/// Samples one trace of at most `max_path_length` states, stopping at the
/// first conclusive state.
pub fn simulate_trace<C: Chain + ?Sized, R: Rng + ?Sized>(
    chain: &C,
    q: &ResolvedQuery,
    max_path_length: usize,
    rng: &mut R,
) -> (TraceVerdict, usize) {
    walk(chain, q, max_path_length, rng, |_| {})
}

/// Like [`simulate_trace`] but keeps the visited states.
pub fn sample_trace<C: Chain + ?Sized, R: Rng + ?Sized>(
    chain: &C,
    q: &ResolvedQuery,
    max_path_length: usize,
    rng: &mut R,
) -> (TraceVerdict, crate::dtmc::Trace) {
    let mut states = Vec::new();
    let (verdict, _) = walk(chain, q, max_path_length, rng, |s| states.push(s));
    let truncated = verdict == TraceVerdict::Inconclusive;
    (verdict, crate::dtmc::Trace::new(states, truncated))
}

#[derive(Default, Clone, Copy)]
struct Partial {
    tally: Tally,
    total_len: u64,
}

fn run_range<C: Chain + ?Sized>(
    chain: &C,
    q: &ResolvedQuery,
    plan: &SamplingPlan,
    range: std::ops::Range<usize>,
) -> Partial {
    let mut part = Partial::default();
    for i in range {
        let mut rng = trace_rng(plan.seed, i as u64);
        let (verdict, len) = simulate_trace(chain, q, plan.max_path_length, &mut rng);
        part.tally.record(verdict);
        part.total_len += len as u64;
    }
    part
}

/// `p' = (1/N) sum b_i` over `plan.samples` traces on one worker.
pub fn estimate<C: Chain + ?Sized>(
    chain: &C,
    q: &UntilQuery,
    plan: &SamplingPlan,
) -> Result<EstimationResult, SmcError> {
    estimate_with_workers(chain, q, plan, 1)
}

/// [`estimate`] with traces split into contiguous blocks over `workers`
/// threads. The result is identical for every worker count apart from
/// `wall_time`.
pub fn estimate_with_workers<C: Chain + ?Sized>(
    chain: &C,
    q: &UntilQuery,
    plan: &SamplingPlan,
    workers: usize,
) -> Result<EstimationResult, SmcError> {
    plan.check()?;
    let resolved = q.resolve(chain.model())?;
    let start = Instant::now();
    let workers = workers.clamp(1, plan.samples);
    let total = if workers == 1 {
        run_range(chain, &resolved, plan, 0..plan.samples)
    } else {
        let block = plan.samples.div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let lo = (w * block).min(plan.samples);
                    let hi = ((w + 1) * block).min(plan.samples);
                    let resolved = &resolved;
                    scope.spawn(move || run_range(chain, resolved, plan, lo..hi))
                })
                .collect();
            handles.into_iter().fold(Partial::default(), |mut acc, h| {
                let part = h.join().expect("sampling worker panicked");
                acc.tally.merge(part.tally);
                acc.total_len += part.total_len;
                acc
            })
        })
    };
    let n = plan.samples as f64;
    Ok(EstimationResult {
        estimate: total.tally.true_count as f64 / n,
        samples_used: plan.samples,
        tally: total.tally,
        wall_time: start.elapsed(),
        mean_trace_length: total.total_len as f64 / n,
        mean_stalk_length: None,
        epsilon: plan.epsilon,
        delta: plan.delta,
    })
}
