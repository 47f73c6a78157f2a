//! Shared fixtures and brute-force oracles for integration tests.
//!
//! Oracles here deliberately avoid the library's solvers and searches: path
//! mass is pushed forward step by step, reachability is a plain BFS.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use bouquet_core::{Dtmc, PetalConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn names() -> Vec<String> {
    vec!["a".into(), "b".into()]
}

pub fn t1() -> Dtmc {
    Dtmc::new(
        0,
        vec![vec![(1, 0.5), (2, 0.5)], vec![(1, 1.0)], vec![(2, 1.0)]],
        names(),
        vec![vec![0], vec![1], vec![]],
    )
    .unwrap()
}

pub fn t2() -> Dtmc {
    Dtmc::new(
        0,
        vec![vec![(0, 0.5), (1, 0.3), (2, 0.2)], vec![(1, 1.0)], vec![(2, 1.0)]],
        names(),
        vec![vec![0], vec![1], vec![]],
    )
    .unwrap()
}

/// Line chain with every state labeled `a` and the last one `b`.
pub fn l10() -> Dtmc {
    let rows = (0..10).map(|s| vec![((s + 1).min(9), 1.0)]).collect();
    let mut labels = vec![vec![0]; 10];
    labels[9] = vec![1];
    Dtmc::new(0, rows, names(), labels).unwrap()
}

/// Chain with out-degrees in `1..=max_degree` and independent labels.
pub fn random_chain(rng: &mut ChaCha8Rng, n: usize, max_degree: usize, p_a: f64, p_b: f64) -> Dtmc {
    let rows = (0..n)
        .map(|_| {
            let degree = rng.random_range(1..=max_degree.min(n));
            let mut targets = BTreeSet::new();
            while targets.len() < degree {
                targets.insert(rng.random_range(0..n));
            }
            let weights: Vec<f64> = targets.iter().map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = weights.iter().sum();
            targets.into_iter().zip(weights).map(|(t, w)| (t, w / total)).collect()
        })
        .collect();
    let labels = (0..n)
        .map(|_| {
            let mut set = Vec::new();
            if rng.random::<f64>() < p_a {
                set.push(0);
            }
            if rng.random::<f64>() < p_b {
                set.push(1);
            }
            set
        })
        .collect();
    Dtmc::new(0, rows, names(), labels).unwrap()
}

/// A sparse core feeding into closed petals, the shape in which flowers
/// actually occur. Needs `n >= 4`.
pub fn random_petal_chain(rng: &mut ChaCha8Rng, n: usize) -> Dtmc {
    let size = rng.random_range(1..=6usize.min(n / 4).max(1));
    let count = rng.random_range(1..=(n / 2 / size).max(1));
    let cfg = bouquet_core::GeneratorConfig {
        rho: (rng.random_range(1..=3usize) as f64 / (n - 1) as f64).min(1.0),
        ..bouquet_core::GeneratorConfig::new(n, 0.0, rng.random())
    }
    .with_labels(0.7, 0.15)
    .with_petals(PetalConfig {
        count,
        size,
        p_a: 0.6,
        p_b: 0.3,
    });
    bouquet_core::generate_random_dtmc(&cfg).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Pr(a U b)` from `start` by pushing undecided path mass forward `depth`
/// steps. Returns the accumulated value and the mass still undecided.
pub fn path_mass(model: &Dtmc, start: usize, depth: usize) -> (f64, f64) {
    let a = |s: usize| model.has_label(s, 0);
    let b = |s: usize| model.has_label(s, 1);
    if b(start) {
        return (1.0, 0.0);
    }
    if !a(start) {
        return (0.0, 0.0);
    }
    let mut mass = vec![0.0; model.n()];
    mass[start] = 1.0;
    let mut value = 0.0;
    for _ in 0..depth {
        let mut next = vec![0.0; model.n()];
        for (s, &m) in mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (t, p) in model.row(s).iter() {
                if b(t) {
                    value += m * p;
                } else if a(t) {
                    next[t] += m * p;
                }
            }
        }
        mass = next;
    }
    (value, mass.iter().sum())
}

/// All states reachable from `s`, including `s`.
pub fn reach_star(model: &Dtmc, s: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([s]);
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for t in model.row(u).targets() {
            if seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    seen
}

/// First state of `states` whose full reach set has at most `k` members.
pub fn first_flower_linear(model: &Dtmc, states: &[usize], k: usize) -> Option<usize> {
    states.iter().copied().find(|&s| reach_star(model, s).len() <= k)
}
