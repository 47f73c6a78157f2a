//! Random sparse chains with uniform out-degree.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dtmc::Dtmc;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("chain needs at least one state")]
    NoStates,
    #[error("density {rho} gives out-degree {degree} for {n} states; every state needs at least one successor")]
    ZeroDegree { n: usize, rho: f64, degree: usize },
    #[error("density must lie in (0, 1], got {0}")]
    Density(f64),
    #[error("labeling probability must lie in [0, 1], got {0}")]
    LabelProbability(f64),
    #[error("petals need at least one state each and must leave a core state ({needed} of {n} states requested)")]
    Petals { n: usize, needed: usize },
    #[error("out-degree {degree} exceeds the {available} possible successors of a core state")]
    DegreeTooLarge { degree: usize, available: usize },
}

/// Closed groups of states appended after the core. Each petal state only
/// transitions within its own petal, so every petal is a flower for any
/// `k >= size`. Core states enter a petal only through its first state,
/// which is labeled `a` and nothing else.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PetalConfig {
    pub count: usize,
    pub size: usize,
    pub p_a: f64,
    pub p_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub n: usize,
    pub rho: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub seed: u64,
    pub petals: Option<PetalConfig>,
}

impl GeneratorConfig {
    pub fn new(n: usize, rho: f64, seed: u64) -> Self {
        GeneratorConfig {
            n,
            rho,
            p_a: 0.8,
            p_b: 0.05,
            seed,
            petals: None,
        }
    }

    pub fn with_labels(self, p_a: f64, p_b: f64) -> Self {
        GeneratorConfig { p_a, p_b, ..self }
    }

    pub fn with_petals(self, petals: PetalConfig) -> Self {
        GeneratorConfig {
            petals: Some(petals),
            ..self
        }
    }

    /// `round(rho * (n - 1))`.
    pub fn degree(&self) -> usize {
        (self.rho * self.n.saturating_sub(1) as f64).round() as usize
    }

    pub fn check(&self) -> Result<(), GeneratorError> {
        if self.n == 0 {
            return Err(GeneratorError::NoStates);
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            if self.rho == 0.0 {
                return Err(self.zero_degree());
            }
            return Err(GeneratorError::Density(self.rho));
        }
        if self.degree() == 0 {
            return Err(self.zero_degree());
        }
        let mut probabilities = vec![self.p_a, self.p_b];
        if let Some(p) = self.petals {
            let needed = p.count * p.size;
            if p.size == 0 || needed >= self.n {
                return Err(GeneratorError::Petals { n: self.n, needed });
            }
            let available = self.n - needed + p.count;
            if self.degree() > available {
                return Err(GeneratorError::DegreeTooLarge {
                    degree: self.degree(),
                    available,
                });
            }
            probabilities.extend([p.p_a, p.p_b]);
        }
        if let Some(&p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(GeneratorError::LabelProbability(p));
        }
        Ok(())
    }

    fn zero_degree(&self) -> GeneratorError {
        GeneratorError::ZeroDegree {
            n: self.n,
            rho: self.rho,
            degree: self.degree(),
        }
    }
}

/// Builds a chain from `cfg`, deterministic in `cfg.seed`. State 0 is the
/// initial state. Core states receive `degree()` distinct successors drawn
/// uniformly from the core and the petal entries, with weights from
/// normalized uniform draws.
pub fn generate_random_dtmc(cfg: &GeneratorConfig) -> Result<Dtmc, GeneratorError> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n;
    let petal_states = cfg.petals.map_or(0, |p| p.count * p.size);
    let core = n - petal_states;
    let degree = cfg.degree();

    let (count, size) = cfg.petals.map_or((0, 1), |p| (p.count, p.size));
    let entry = |i: usize| if i < core { i } else { core + (i - core) * size };

    let mut rows = Vec::with_capacity(n);
    for _ in 0..core {
        let targets: Vec<usize> = sample(&mut rng, core + count, degree).into_iter().map(entry).collect();
        rows.push(weighted(&mut rng, targets));
    }
    if let Some(p) = cfg.petals {
        let within = degree.min(p.size);
        for petal in 0..p.count {
            let base = core + petal * p.size;
            for _ in 0..p.size {
                let targets = sample(&mut rng, p.size, within).into_iter().map(|t| base + t).collect();
                rows.push(weighted(&mut rng, targets));
            }
        }
    }

    let mut labels = Vec::with_capacity(n);
    for s in 0..n {
        if s >= core && (s - core).is_multiple_of(size) {
            labels.push(vec![0]);
            continue;
        }
        let (p_a, p_b) = match cfg.petals {
            Some(p) if s >= core => (p.p_a, p.p_b),
            _ => (cfg.p_a, cfg.p_b),
        };
        let mut set = Vec::new();
        if rng.random::<f64>() < p_a {
            set.push(0);
        }
        if rng.random::<f64>() < p_b {
            set.push(1);
        }
        labels.push(set);
    }

    Ok(Dtmc::new(0, rows, vec!["a".into(), "b".into()], labels).expect("generated chain is valid"))
}

fn weighted(rng: &mut ChaCha8Rng, targets: Vec<usize>) -> Vec<(usize, f64)> {
    // 1 - u lies in (0, 1], so no weight is zero
    let weights: Vec<f64> = targets.iter().map(|_| 1.0 - rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    targets.into_iter().zip(weights).map(|(t, w)| (t, w / total)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bouquet::{pre_annotate, FlowerMark};

    #[test]
    fn density_matches_target() {
        let model = generate_random_dtmc(&GeneratorConfig::new(1000, 0.05, 7)).unwrap();
        let density = model.density().unwrap();
        assert!((0.049..=0.051).contains(&density), "density {density}");
        assert!(model.validate().is_ok());
        for s in 0..model.n() {
            assert_eq!(model.row(s).len(), 50);
        }
    }

    #[test]
    fn label_frequencies() {
        let model = generate_random_dtmc(&GeneratorConfig::new(5000, 0.002, 3)).unwrap();
        let a = (0..model.n()).filter(|&s| model.has_label(s, 0)).count() as f64 / 5000.0;
        let b = (0..model.n()).filter(|&s| model.has_label(s, 1)).count() as f64 / 5000.0;
        assert!((a - 0.8).abs() <= 0.02, "a fraction {a}");
        assert!((b - 0.05).abs() <= 0.02, "b fraction {b}");
    }

    #[test]
    fn rejects_zero_degree() {
        assert!(matches!(
            generate_random_dtmc(&GeneratorConfig::new(10, 0.0, 1)),
            Err(GeneratorError::ZeroDegree { .. })
        ));
        assert!(matches!(
            generate_random_dtmc(&GeneratorConfig::new(10, 0.01, 1)),
            Err(GeneratorError::ZeroDegree { .. })
        ));
        assert_eq!(
            generate_random_dtmc(&GeneratorConfig::new(10, 1.5, 1)),
            Err(GeneratorError::Density(1.5))
        );
        assert_eq!(
            generate_random_dtmc(&GeneratorConfig::new(10, 0.5, 1).with_labels(1.2, 0.0)),
            Err(GeneratorError::LabelProbability(1.2))
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = GeneratorConfig::new(300, 0.05, 11);
        assert_eq!(generate_random_dtmc(&cfg), generate_random_dtmc(&cfg));
        assert_ne!(
            generate_random_dtmc(&cfg),
            generate_random_dtmc(&GeneratorConfig { seed: 12, ..cfg })
        );
    }

    #[test]
    fn petals_are_closed_flowers() {
        let petals = PetalConfig {
            count: 10,
            size: 5,
            p_a: 0.5,
            p_b: 0.3,
        };
        let cfg = GeneratorConfig::new(200, 0.05, 5).with_petals(petals);
        let model = generate_random_dtmc(&cfg).unwrap();
        let store = pre_annotate(&model, 5);
        for s in 150..200 {
            assert_eq!(store.mark(s), FlowerMark::Flower);
            let base = 150 + (s - 150) / 5 * 5;
            assert!(model.row(s).targets().all(|t| (base..base + 5).contains(&t)));
        }
        for s in 0..150 {
            assert!(model.row(s).targets().all(|t| t < 150 || (t - 150) % 5 == 0));
        }
        for root in (150..200).step_by(5) {
            assert_eq!(model.labels(root).collect::<Vec<_>>(), vec![0]);
        }
        assert_eq!(
            GeneratorConfig::new(10, 0.5, 0)
                .with_petals(PetalConfig {
                    count: 2,
                    size: 5,
                    ..petals
                })
                .check(),
            Err(GeneratorError::Petals { n: 10, needed: 10 })
        );
    }
}
