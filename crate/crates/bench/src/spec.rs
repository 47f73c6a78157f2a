use std::fmt;
use std::str::FromStr;

use bouquet_core::PetalConfig;

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    SizeSweep,
    DensitySweep,
    AccuracySweep,
    RepeatQuery,
    IoCount,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::SizeSweep,
        Suite::DensitySweep,
        Suite::AccuracySweep,
        Suite::RepeatQuery,
        Suite::IoCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SizeSweep => "size_sweep",
            Suite::DensitySweep => "density_sweep",
            Suite::AccuracySweep => "accuracy_sweep",
            Suite::RepeatQuery => "repeat_query",
            Suite::IoCount => "io_count",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| BenchError::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Smc,
    BouquetPre,
    BouquetFly,
    Nmc,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Smc, Method::BouquetPre, Method::BouquetFly, Method::Nmc];

    pub fn name(self) -> &'static str {
        match self {
            Method::Smc => "smc",
            Method::BouquetPre => "bouquet_pre",
            Method::BouquetFly => "bouquet_fly",
            Method::Nmc => "nmc",
        }
    }

    /// CSV `method` column.
    pub fn engine(self) -> &'static str {
        match self {
            Method::Smc => "smc",
            Method::BouquetPre | Method::BouquetFly => "bouquet",
            Method::Nmc => "nmc",
        }
    }

    /// CSV `annotation_mode` column.
    pub fn annotation_mode(self) -> Option<&'static str> {
        match self {
            Method::BouquetPre => Some("pre_annotated"),
            Method::BouquetFly => Some("on_the_fly"),
            Method::Smc | Method::Nmc => None,
        }
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| BenchError::value("methods", s, "expected smc, bouquet_pre, bouquet_fly or nmc"))
    }
}

/// Parameters of one suite run. Lists are swept as a Cartesian product.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSpec {
    pub suite: Suite,
    pub sizes: Vec<usize>,
    pub densities: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub delta: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Flower threshold; `max(2, isqrt(n))` when absent.
    pub k: Option<usize>,
    pub r_prob: f64,
    pub methods: Vec<Method>,
    /// Queries of the repeat-query suite, in order. Other suites use the first.
    pub formulas: Vec<String>,
    /// Split every sampling run into `batches` runs of `batch_size` traces.
    pub batches: Option<usize>,
    pub batch_size: Option<usize>,
    pub p_a: f64,
    pub p_b: f64,
    pub petals: Option<PetalConfig>,
    pub max_path_length: usize,
    /// Replicates run in parallel on this many threads.
    pub workers: usize,
    /// Repeat-query suite only: each query is replayed this many times on
    /// copies of the store and the fastest wall time is kept.
    pub timing_repeats: usize,
}

impl SuiteSpec {
    /// Reduced-scale defaults; `large` switches to the full experiment sizes.
    pub fn defaults(suite: Suite, large: bool) -> Self {
        let base = SuiteSpec {
            suite,
            sizes: vec![1000, 10_000],
            densities: vec![0.05],
            epsilons: vec![0.01],
            delta: 0.01,
            replicates: 5,
            seed: 1,
            k: None,
            r_prob: 0.01,
            methods: vec![Method::Smc, Method::BouquetPre, Method::BouquetFly],
            formulas: vec!["P=? [ a U b ]".to_string()],
            batches: None,
            batch_size: None,
            p_a: 0.8,
            p_b: 0.05,
            petals: None,
            max_path_length: bouquet_core::DEFAULT_MAX_PATH_LENGTH,
            workers: 1,
            timing_repeats: 1,
        };
        match suite {
            Suite::SizeSweep => SuiteSpec {
                sizes: if large {
                    vec![1000, 10_000, 100_000]
                } else {
                    vec![1000, 10_000]
                },
                ..base
            },
            Suite::DensitySweep => SuiteSpec {
                sizes: vec![if large { 100_000 } else { 10_000 }],
                densities: vec![0.0005, 0.001, 0.002, 0.005],
                ..base
            },
            Suite::AccuracySweep => SuiteSpec {
                sizes: vec![1000],
                epsilons: vec![0.05, 0.02, 0.01, 0.005],
                methods: vec![Method::Smc, Method::BouquetPre, Method::BouquetFly, Method::Nmc],
                ..base
            },
            Suite::RepeatQuery => SuiteSpec {
                sizes: vec![10_000],
                replicates: 20,
                methods: vec![Method::BouquetFly],
                formulas: vec![
                    "P=? [ a U b ]".to_string(),
                    "P=? [ (a | b) U b ]".to_string(),
                    "P=? [ a U (a & b) ]".to_string(),
                ],
                timing_repeats: 10,
                ..base
            },
            Suite::IoCount => SuiteSpec {
                sizes: vec![2000],
                densities: vec![0.002],
                epsilons: vec![0.05],
                delta: 0.05,
                methods: vec![Method::Smc, Method::BouquetPre],
                p_a: 1.0,
                p_b: 0.0,
                petals: Some(PetalConfig {
                    count: 50,
                    size: 8,
                    p_a: 0.6,
                    p_b: 0.3,
                }),
                ..base
            },
        }
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), BenchError> {
        let value = value.trim();
        match key.trim() {
            "suite" => self.suite = value.parse()?,
            "sizes" => self.sizes = list(key, value)?,
            "densities" | "density" => self.densities = list(key, value)?,
            "epsilons" | "epsilon" => self.epsilons = list(key, value)?,
            "delta" => self.delta = scalar(key, value)?,
            "replicates" => self.replicates = scalar(key, value)?,
            "seed" => self.seed = scalar(key, value)?,
            "k" => self.k = Some(scalar(key, value)?),
            "rprob" => self.r_prob = scalar(key, value)?,
            "methods" => self.methods = list(key, value)?,
            "formulas" => {
                self.formulas = value
                    .split(';')
                    .map(str::trim)
                    .filter(|f| !f.is_empty())
                    .map(String::from)
                    .collect()
            }
            "batches" => self.batches = Some(scalar(key, value)?),
            "batch_size" => self.batch_size = Some(scalar(key, value)?),
            "p_a" => self.p_a = scalar(key, value)?,
            "p_b" => self.p_b = scalar(key, value)?,
            "petal_count" => self.petals_mut().count = scalar(key, value)?,
            "petal_size" => self.petals_mut().size = scalar(key, value)?,
            "petal_p_a" => self.petals_mut().p_a = scalar(key, value)?,
            "petal_p_b" => self.petals_mut().p_b = scalar(key, value)?,
            "max_path_length" => self.max_path_length = scalar(key, value)?,
            "workers" => self.workers = scalar(key, value)?,
            "timing_repeats" => self.timing_repeats = scalar(key, value)?,
            other => return Err(BenchError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    fn petals_mut(&mut self) -> &mut PetalConfig {
        self.petals.get_or_insert(PetalConfig {
            count: 0,
            size: 1,
            p_a: 0.6,
            p_b: 0.3,
        })
    }

    /// Parses a config file of `key=value` lines; `#` starts a comment. The
    /// `suite` and `large` keys choose the defaults the rest is applied to.
    /// Later lines override earlier ones.
    pub fn from_config(text: &str) -> Result<Self, BenchError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(BenchError::ConfigLine(i + 1))?;
            pairs.push((key.trim(), value.trim()));
        }
        let suite: Suite = pairs
            .iter()
            .rev()
            .find(|(k, _)| *k == "suite")
            .ok_or(BenchError::MissingSuite)?
            .1
            .parse()?;
        let large = match pairs.iter().rev().find(|(k, _)| *k == "large") {
            Some((_, v)) => scalar("large", v)?,
            None => false,
        };
        let mut spec = SuiteSpec::defaults(suite, large);
        for (key, value) in pairs {
            if key != "large" {
                spec.set(key, value)?;
            }
        }
        Ok(spec)
    }

    pub fn check(&self) -> Result<(), BenchError> {
        let fail = |key: &str, what: &str| Err(BenchError::value(key, "", what));
        if self.sizes.is_empty() || self.densities.is_empty() || self.epsilons.is_empty() {
            return fail("sizes/densities/epsilons", "lists must not be empty");
        }
        if self.replicates == 0 {
            return fail("replicates", "must be positive");
        }
        if self.formulas.is_empty() {
            return fail("formulas", "at least one formula is required");
        }
        if self.methods.is_empty() {
            return fail("methods", "at least one method is required");
        }
        if self.batches.is_some() != self.batch_size.is_some() {
            return fail("batches", "batches and batch_size must be given together");
        }
        if self.batches == Some(0) || self.batch_size == Some(0) {
            return fail("batches", "batch count and size must be positive");
        }
        if self.timing_repeats == 0 {
            return fail("timing_repeats", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.r_prob) {
            return fail("rprob", "must lie in [0, 1]");
        }
        Ok(())
    }
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, BenchError> {
    value
        .trim()
        .parse()
        .map_err(|_| BenchError::value(key, value, "cannot parse value"))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, BenchError> {
    value.split(',').map(|item| scalar(key, item)).collect()
}
