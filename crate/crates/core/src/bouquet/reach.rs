use std::collections::HashSet;

use super::{AnnotationStore, BouquetError, FlowerMark};
use crate::dtmc::Chain;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReachOutcome {
    /// `reach*(s)` in ascending order; at most `k` states.
    Small(Vec<usize>),
    /// More than `k` states are reachable.
    Big,
}

impl ReachOutcome {
    pub fn is_small(&self) -> bool {
        matches!(self, ReachOutcome::Small(_))
    }
}

/// Depth-first search for `reach*(s)` that gives up once more than `k`
/// states have been seen. Each expanded state costs one fetch.
pub fn reach_bounded<C: Chain + ?Sized>(chain: &C, s: usize, k: usize) -> ReachOutcome {
    reach_counting(chain, s, k).0
}

/// [`reach_bounded`] plus the number of rows expanded.
pub(crate) fn reach_counting<C: Chain + ?Sized>(chain: &C, s: usize, k: usize) -> (ReachOutcome, u64) {
    let mut seen = HashSet::with_capacity(k.min(1 << 16) + 1);
    seen.insert(s);
    if seen.len() > k {
        return (ReachOutcome::Big, 0);
    }
    let mut stack = vec![s];
    let mut expanded = 0;
    while let Some(t) = stack.pop() {
        expanded += 1;
        for u in chain.fetch(t).targets() {
            if seen.insert(u) {
                if seen.len() > k {
                    return (ReachOutcome::Big, expanded);
                }
                stack.push(u);
            }
        }
    }
    let mut members: Vec<usize> = seen.into_iter().collect();
    members.sort_unstable();
    (ReachOutcome::Small(members), expanded)
}

/// Whether `s` roots a flower, answered from the store when known and by a
/// bounded search otherwise. The outcome is recorded in the store.
pub fn is_flower<C: Chain + ?Sized>(
    chain: &C,
    store: &mut AnnotationStore,
    s: usize,
    k: usize,
) -> Result<bool, BouquetError> {
    store.check_k(k)?;
    let n = chain.model().n();
    if s >= n {
        return Err(BouquetError::StateOutOfRange { state: s, n });
    }
    Ok(lookup_or_search(chain, store, s))
}

pub(crate) fn lookup_or_search<C: Chain + ?Sized>(chain: &C, store: &mut AnnotationStore, s: usize) -> bool {
    match store.mark(s) {
        FlowerMark::Flower => return true,
        FlowerMark::NotFlower => return false,
        FlowerMark::Unknown => {}
    }
    store.log_search(s);
    let (outcome, expanded) = reach_counting(chain, s, store.k());
    store.counters.graph_visits += expanded;
    match outcome {
        ReachOutcome::Small(members) => {
            store.annotate_counted(s, FlowerMark::Flower, Some(members.len()));
            true
        }
        ReachOutcome::Big => {
            store.annotate(s, FlowerMark::NotFlower);
            false
        }
    }
}

/// Locates the earliest flower root in `a ++ [c_s]`, where `a` lists trace
/// states in visiting order and `c_s` is a known flower. Everything before
/// the returned state is annotated NotFlower, everything from it on Flower.
pub fn find_flowerhead<C: Chain + ?Sized>(
    chain: &C,
    store: &mut AnnotationStore,
    a: &[usize],
    c_s: usize,
    k: usize,
) -> Result<usize, BouquetError> {
    let n = chain.model().n();
    if let Some(&state) = a.iter().chain([&c_s]).find(|&&s| s >= n) {
        return Err(BouquetError::StateOutOfRange { state, n });
    }
    if !is_flower(chain, store, c_s, k)? {
        return Err(BouquetError::NotAFlower(c_s));
    }
    let index = locate_flowerhead(chain, store, a);
    Ok(a.get(index).copied().unwrap_or(c_s))
}

/// Index into `a ++ [c_s]` of the earliest flower root, assuming `c_s` is a
/// flower.
pub(crate) fn locate_flowerhead<C: Chain + ?Sized>(chain: &C, store: &mut AnnotationStore, a: &[usize]) -> usize {
    // flower status along `a` is false...false true...true
    let (mut lo, mut hi) = (0, a.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if lookup_or_search(chain, store, a[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    for &s in &a[..lo] {
        store.annotate(s, FlowerMark::NotFlower);
    }
    for &s in &a[lo..] {
        store.annotate(s, FlowerMark::Flower);
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtmc::fixtures::l10;
    use crate::dtmc::{Dtmc, Metered};

    #[test]
    fn bounded_reachability_on_line() {
        let model = l10();
        assert_eq!(reach_bounded(&model, 5, 6), ReachOutcome::Small(vec![5, 6, 7, 8, 9]));
        assert_eq!(reach_bounded(&model, 3, 6), ReachOutcome::Big);
        assert_eq!(reach_bounded(&model, 9, 1), ReachOutcome::Small(vec![9]));
    }

    #[test]
    fn flower_checks_are_memoized() {
        let model = l10();
        let metered = Metered::new(&model);
        let mut store = AnnotationStore::new(10, 6);
        assert!(is_flower(&metered, &mut store, 4, 6).unwrap());
        assert_eq!(store.mark(4), FlowerMark::Flower);
        assert_eq!(store.reach_count(4), Some(6));
        assert!(!is_flower(&metered, &mut store, 3, 6).unwrap());
        assert_eq!(store.mark(3), FlowerMark::NotFlower);

        let fetched = metered.fetches();
        let searches = store.counters.reach_searches;
        assert!(is_flower(&metered, &mut store, 4, 6).unwrap());
        assert!(!is_flower(&metered, &mut store, 3, 6).unwrap());
        assert_eq!(metered.fetches(), fetched);
        assert_eq!(store.counters.reach_searches, searches);

        assert_eq!(
            is_flower(&metered, &mut store, 4, 7),
            Err(BouquetError::KMismatch { store: 6, run: 7 })
        );
    }

    #[test]
    fn flowerhead_inside_segment() {
        let model = l10();
        let mut store = AnnotationStore::new(10, 6);
        assert_eq!(find_flowerhead(&model, &mut store, &[2, 3, 4, 5], 6, 6).unwrap(), 4);
        assert_eq!(store.mark(2), FlowerMark::NotFlower);
        assert_eq!(store.mark(3), FlowerMark::NotFlower);
        assert_eq!(store.mark(4), FlowerMark::Flower);
        assert_eq!(store.mark(5), FlowerMark::Flower);
    }

    #[test]
    fn flowerhead_at_end_or_without_segment() {
        let model = l10();
        let mut store = AnnotationStore::new(10, 6);
        assert_eq!(find_flowerhead(&model, &mut store, &[0, 1, 2, 3], 4, 6).unwrap(), 4);
        assert!((0..4).all(|s| store.mark(s) == FlowerMark::NotFlower));
        assert_eq!(find_flowerhead(&model, &mut store, &[], 7, 6).unwrap(), 7);
        assert_eq!(
            find_flowerhead(&model, &mut store, &[0], 1, 6),
            Err(BouquetError::NotAFlower(1))
        );
    }

    #[test]
    fn duplicate_states_annotate_consistently() {
        // 0 <-> 1 -> 2 -> 3 (absorbing)
        let model = Dtmc::new(
            0,
            vec![vec![(1, 1.0)], vec![(0, 0.5), (2, 0.5)], vec![(3, 1.0)], vec![(3, 1.0)]],
            vec![],
            vec![],
        )
        .unwrap();
        let mut store = AnnotationStore::new(4, 2);
        assert_eq!(find_flowerhead(&model, &mut store, &[0, 1, 0, 1, 2], 3, 2).unwrap(), 2);
        assert_eq!(store.mark(0), FlowerMark::NotFlower);
        assert_eq!(store.mark(1), FlowerMark::NotFlower);
        assert_eq!(store.mark(2), FlowerMark::Flower);
    }
}
