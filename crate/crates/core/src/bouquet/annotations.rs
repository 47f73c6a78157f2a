use std::collections::HashMap;

use super::BouquetError;
use crate::formula::FormulaFingerprint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FlowerMark {
    #[default]
    Unknown,
    NotFlower,
    Flower,
}

/// Work counters. Not persisted and ignored by equality.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Counters {
    /// Bounded reachability searches started by `is_flower`.
    pub reach_searches: u64,
    /// Rows expanded by those searches.
    pub graph_visits: u64,
    pub flowers_built: u64,
    pub nmc_solves: u64,
    pub solver_iterations: u64,
    pub cache_hits: u64,
}

/// Per-state flower knowledge plus cached exact values, all under one `k`.
#[derive(Debug, Clone)]
pub struct AnnotationStore {
    k: usize,
    marks: Vec<FlowerMark>,
    reach_count: Vec<Option<u32>>,
    prob_cache: HashMap<(FormulaFingerprint, usize), f64>,
    pub counters: Counters,
    search_log: Option<Vec<usize>>,
}

impl PartialEq for AnnotationStore {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.marks == other.marks
            && self.reach_count == other.reach_count
            && self.prob_cache == other.prob_cache
    }
}

impl AnnotationStore {
    /// An empty store for a chain of `n` states.
    pub fn new(n: usize, k: usize) -> Self {
        AnnotationStore {
            k,
            marks: vec![FlowerMark::Unknown; n],
            reach_count: vec![None; n],
            prob_cache: HashMap::new(),
            counters: Counters::default(),
            search_log: None,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.marks.len()
    }

    pub fn check_k(&self, k: usize) -> Result<(), BouquetError> {
        if self.k == k {
            Ok(())
        } else {
            Err(BouquetError::KMismatch { store: self.k, run: k })
        }
    }

    pub fn mark(&self, state: usize) -> FlowerMark {
        self.marks[state]
    }

    pub fn marks(&self) -> &[FlowerMark] {
        &self.marks
    }

    pub fn reach_count(&self, state: usize) -> Option<u32> {
        self.reach_count[state]
    }

    /// Records `mark` for `state` if it is still unknown. Annotations never
    /// change once set.
    pub fn annotate(&mut self, state: usize, mark: FlowerMark) {
        if self.marks[state] == FlowerMark::Unknown {
            self.marks[state] = mark;
        }
    }

    pub(crate) fn annotate_counted(&mut self, state: usize, mark: FlowerMark, reach: Option<usize>) {
        self.annotate(state, mark);
        if mark == FlowerMark::Flower {
            if let Some(count) = reach {
                self.reach_count[state] = u32::try_from(count).ok();
            }
        }
    }

    pub fn set_reach_count(&mut self, state: usize, count: Option<u32>) {
        self.reach_count[state] = count;
    }

    pub fn annotated_count(&self) -> usize {
        self.marks.iter().filter(|&&m| m != FlowerMark::Unknown).count()
    }

    pub fn is_fully_annotated(&self) -> bool {
        self.marks.iter().all(|&m| m != FlowerMark::Unknown)
    }

    pub fn cached(&self, formula: &FormulaFingerprint, state: usize) -> Option<f64> {
        self.prob_cache.get(&(*formula, state)).copied()
    }

    /// Caches an exact value. Only flower states may carry one; the state is
    /// marked Flower if it was unknown.
    pub fn insert_value(&mut self, formula: FormulaFingerprint, state: usize, value: f64) {
        self.annotate(state, FlowerMark::Flower);
        debug_assert_eq!(self.marks[state], FlowerMark::Flower);
        self.prob_cache.insert((formula, state), value);
    }

    /// Cached values in a stable order: by formula, then by state.
    pub fn cached_values(&self) -> Vec<(FormulaFingerprint, usize, f64)> {
        let mut values: Vec<_> = self.prob_cache.iter().map(|(&(f, s), &v)| (f, s, v)).collect();
        values.sort_by_key(|&(f, s, _)| (f, s));
        values
    }

    pub fn cached_formulas(&self) -> usize {
        let mut formulas: Vec<_> = self.prob_cache.keys().map(|(f, _)| *f).collect();
        formulas.sort();
        formulas.dedup();
        formulas.len()
    }

    /// Starts logging the root state of every reachability search.
    pub fn record_searches(&mut self) {
        self.search_log.get_or_insert_with(Vec::new);
    }

    /// Drains the search log.
    pub fn take_search_log(&mut self) -> Vec<usize> {
        self.search_log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub(crate) fn log_search(&mut self, state: usize) {
        self.counters.reach_searches += 1;
        if let Some(log) = self.search_log.as_mut() {
            log.push(state);
        }
    }
}
