use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::flower::flower_value;
use super::reach::{locate_flowerhead, lookup_or_search};
use super::{AnnotationStore, BouquetError, BouquetParams, FlowerMark};
use crate::dtmc::Chain;
use crate::formula::{TraceVerdict, UntilQuery};
use crate::smc::{trace_rng, EstimationResult, Tally};

/// Coin source for trace `index`: the same key as [`trace_rng`] on a
/// disjoint stream.
fn coin_rng(seed: u64, index: u64) -> ChaCha8Rng {
    trace_rng(seed, index | 1 << 63)
}

enum Outcome {
    Verdict(TraceVerdict),
    /// Resolved exactly at a flower root reached after `stalk` states.
    Flower {
        root: usize,
        value: f64,
        stalk: usize,
    },
}

/// Estimates `q` with `params.samples` traces from the initial state.
///
/// At each visited state, in order: a Φ₂ state ends the trace with 1, a
/// `¬Φ₁ ∧ ¬Φ₂` state ends it with 0, a known flower ends it with its exact
/// value, a known non-flower is stepped over. An unknown state is searched
/// with probability `r_prob`; a hit binary-searches the skipped states for
/// the earliest flower and ends the trace there, a miss marks all skipped
/// states as non-flowers. Unsearched states are remembered as skipped.
/// Traces reaching `max_path_length` states contribute 0.
///
/// Search coins come from a stream separate from the transitions, so a
/// trace follows the same path as the SMC trace with the same seed and
/// index, up to where it stops, whatever the store holds.
pub fn bouquet_estimate<C: Chain + ?Sized>(
    chain: &C,
    q: &UntilQuery,
    params: &BouquetParams,
    store: &mut AnnotationStore,
) -> Result<EstimationResult, BouquetError> {
    params.check()?;
    if !q.is_unbounded() {
        return Err(BouquetError::BoundedQuery);
    }
    store.check_k(params.k)?;
    let model = chain.model();
    let resolved = q.resolve(model)?;
    let fingerprint = q.fingerprint();
    let start = Instant::now();

    let mut tally = Tally::default();
    let mut per_root: BTreeMap<usize, (f64, u64)> = BTreeMap::new();
    let mut total_len = 0u64;
    let mut total_stalk = 0u64;
    // skipped states and their trace positions
    let mut skipped: Vec<usize> = Vec::new();
    let mut positions: Vec<usize> = Vec::new();

    for i in 0..params.samples {
        let mut rng = trace_rng(params.seed, i as u64);
        let mut coins = coin_rng(params.seed, i as u64);
        skipped.clear();
        positions.clear();
        let mut state = model.initial();
        let mut len = 1usize;
        let outcome = loop {
            if let Some(verdict) = resolved.step(state, len - 1) {
                break Outcome::Verdict(verdict);
            }
            match store.mark(state) {
                FlowerMark::Flower => {
                    let value = flower_value(chain, store, q, &fingerprint, state, params.nmc)?;
                    break Outcome::Flower {
                        root: state,
                        value,
                        stalk: len,
                    };
                }
                FlowerMark::NotFlower => {}
                FlowerMark::Unknown => {
                    let search = match params.r_prob {
                        p if p <= 0.0 => false,
                        p if p >= 1.0 => true,
                        p => coins.random::<f64>() < p,
                    };
                    if search {
                        if lookup_or_search(chain, store, state) {
                            let index = locate_flowerhead(chain, store, &skipped);
                            let (root, stalk) = match skipped.get(index) {
                                Some(&root) => (root, positions[index] + 1),
                                None => (state, len),
                            };
                            let value = flower_value(chain, store, q, &fingerprint, root, params.nmc)?;
                            break Outcome::Flower { root, value, stalk };
                        }
                        for &s in &skipped {
                            store.annotate(s, FlowerMark::NotFlower);
                        }
                        skipped.clear();
                        positions.clear();
                    } else {
                        skipped.push(state);
                        positions.push(len - 1);
                    }
                }
            }
            if len >= params.max_path_length {
                break Outcome::Verdict(TraceVerdict::Inconclusive);
            }
            state = chain.fetch(state).sample(&mut rng);
            len += 1;
        };
        total_len += len as u64;
        match outcome {
            Outcome::Verdict(TraceVerdict::True) => tally.true_count += 1,
            Outcome::Verdict(TraceVerdict::False) => tally.false_count += 1,
            Outcome::Verdict(TraceVerdict::Inconclusive) => tally.inconclusive += 1,
            Outcome::Flower { root, value, stalk } => {
                tally.flower_resolved += 1;
                total_stalk += stalk as u64;
                per_root.entry(root).or_insert((value, 0)).1 += 1;
            }
        }
    }

    // Grouping by root keeps an all-flower run exact: v * (N/N) == v.
    let n = params.samples as f64;
    let mut estimate = tally.true_count as f64 / n;
    for (value, count) in per_root.values() {
        estimate += value * (*count as f64 / n);
    }
    Ok(EstimationResult {
        estimate: estimate.clamp(0.0, 1.0),
        samples_used: params.samples,
        tally,
        wall_time: start.elapsed(),
        mean_trace_length: total_len as f64 / n,
        mean_stalk_length: (tally.flower_resolved > 0).then(|| total_stalk as f64 / tally.flower_resolved as f64),
        epsilon: params.epsilon,
        delta: params.delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bouquet::pre_annotate;
    use crate::dtmc::fixtures::{t1, t2};
    use crate::dtmc::{Dtmc, Metered};
    use crate::formula::parse_formula;
    use crate::smc::{estimate, SamplingPlan};

    fn a_until_b() -> UntilQuery {
        parse_formula("P=? [ a U b ]").unwrap()
    }

    fn params(n: usize, k: usize, r_prob: f64, seed: u64) -> BouquetParams {
        BouquetParams {
            k,
            r_prob,
            ..BouquetParams::new(n, 0.05, 0.05, seed).unwrap()
        }
    }

    #[test]
    fn whole_chain_flower_is_exact() {
        for seed in 0..5 {
            let mut store = AnnotationStore::new(3, 3);
            let result = bouquet_estimate(&t2(), &a_until_b(), &params(3, 3, 1.0, seed), &mut store).unwrap();
            assert_eq!(result.estimate, nmc_value_t2(&store));
            assert!((result.estimate - 0.6).abs() < 1e-9);
            assert_eq!(result.tally.flower_resolved, result.samples_used as u64);
            assert_eq!(result.mean_stalk_length, Some(1.0));
            assert_eq!(store.counters.nmc_solves, 1);
        }
        let mut store = AnnotationStore::new(3, 3);
        let result = bouquet_estimate(&t1(), &a_until_b(), &params(3, 3, 1.0, 1), &mut store).unwrap();
        assert_eq!(result.estimate, 0.5);
    }

    fn nmc_value_t2(store: &AnnotationStore) -> f64 {
        store.cached(&a_until_b().fingerprint(), 0).unwrap()
    }

    #[test]
    fn initial_target_needs_no_search() {
        let model = Dtmc::new(0, vec![vec![(0, 1.0)]], vec!["a".into(), "b".into()], vec![vec![1]]).unwrap();
        let mut store = AnnotationStore::new(1, 2);
        let result = bouquet_estimate(&model, &a_until_b(), &params(1, 2, 1.0, 0), &mut store).unwrap();
        assert_eq!(result.estimate, 1.0);
        assert_eq!(store.counters.reach_searches, 0);
    }

    #[test]
    fn rejects_bounded_queries_and_mismatched_store() {
        let bounded = parse_formula("P=? [ a U<=3 b ]").unwrap();
        let mut store = AnnotationStore::new(3, 3);
        assert_eq!(
            bouquet_estimate(&t2(), &bounded, &params(3, 3, 0.5, 0), &mut store),
            Err(BouquetError::BoundedQuery)
        );
        assert_eq!(
            bouquet_estimate(&t2(), &a_until_b(), &params(3, 4, 0.5, 0), &mut store),
            Err(BouquetError::KMismatch { store: 3, run: 4 })
        );
    }

    #[test]
    fn search_coins_do_not_move_paths() {
        // k = 1 leaves the initial state a non-flower, so no trace is cut short
        let smc = estimate(&t2(), &a_until_b(), &SamplingPlan::auto(0.05, 0.05, 9).unwrap()).unwrap();
        for r_prob in [0.0, 0.3, 1.0] {
            let p = BouquetParams {
                samples: smc.samples_used,
                ..params(3, 1, r_prob, 9)
            };
            let mut store = AnnotationStore::new(3, 1);
            let result = bouquet_estimate(&t2(), &a_until_b(), &p, &mut store).unwrap();
            assert_eq!(result.tally.true_count, smc.tally.true_count);
            assert_eq!(result.mean_trace_length, smc.mean_trace_length);
        }
    }

    #[test]
    fn zero_search_probability_reduces_to_sampling() {
        let model = t2();
        let mut store = AnnotationStore::new(3, 3);
        let p = BouquetParams {
            samples: 2000,
            ..params(3, 3, 0.0, 8)
        };
        let bouquet = bouquet_estimate(&model, &a_until_b(), &p, &mut store).unwrap();
        let plan = SamplingPlan::auto(0.05, 0.05, 8).unwrap().with_samples(2000);
        let smc = estimate(&model, &a_until_b(), &plan).unwrap();
        assert_eq!(bouquet.estimate, smc.estimate);
        assert_eq!(bouquet.tally, smc.tally);
        assert_eq!(store.annotated_count(), 0);
    }

    #[test]
    fn rerun_on_populated_store_solves_nothing() {
        let model = l10_with_labels();
        let mut store = AnnotationStore::new(10, 4);
        let p = params(10, 4, 0.3, 4);
        let first = bouquet_estimate(&model, &a_until_b(), &p, &mut store).unwrap();
        assert!(first.tally.flower_resolved > 0);
        let solves = store.counters.nmc_solves;
        bouquet_estimate(&model, &a_until_b(), &p, &mut store).unwrap();
        assert_eq!(store.counters.nmc_solves, solves);
    }

    fn l10_with_labels() -> Dtmc {
        let mut rows: Vec<Vec<(usize, f64)>> = (0..9).map(|s| vec![(s + 1, 1.0)]).collect();
        rows.push(vec![(9, 1.0)]);
        rows[7] = vec![(8, 0.5), (9, 0.5)];
        let mut labels = vec![vec![0]; 10];
        labels[8] = vec![1];
        labels[9] = vec![0];
        Dtmc::new(0, rows, vec!["a".into(), "b".into()], labels).unwrap()
    }

    #[test]
    fn pre_annotated_stalks_follow_sampling_paths() {
        let model = l10_with_labels();
        let store_k = 4;
        let mut store = pre_annotate(&model, store_k);
        let q = a_until_b();
        let metered = Metered::new(&model);
        let p = BouquetParams {
            samples: 200,
            ..params(10, store_k, 0.01, 3)
        };
        // warm the cache, then measure
        bouquet_estimate(&metered, &q, &p, &mut store).unwrap();
        metered.reset();
        let result = bouquet_estimate(&metered, &q, &p, &mut store).unwrap();
        // flower roots at 6 (reach {6,7,8,9}); stalk 0..=6 has 7 states
        assert_eq!(result.tally.flower_resolved, 200);
        assert_eq!(result.mean_stalk_length, Some(7.0));
        assert_eq!(metered.fetches(), 200 * 6);
        assert!((result.estimate - 0.5).abs() < 1e-12);
    }
}
