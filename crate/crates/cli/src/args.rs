use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bouquet",
    version,
    about = "Model checking of unbounded until on discrete-time Markov chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Evaluate a `P=? [ ... ]` query on a model file.
    Check(CheckArgs),
    /// Write a random sparse chain in canonical model format.
    Generate(GenerateArgs),
    /// Pre-annotate every state of a model and write the annotation file.
    Annotate(AnnotateArgs),
    /// Run an experiment suite and emit CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Nmc,
    Smc,
    Bouquet,
}

impl MethodArg {
    pub fn name(self) -> &'static str {
        match self {
            MethodArg::Nmc => "nmc",
            MethodArg::Smc => "smc",
            MethodArg::Bouquet => "bouquet",
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub formula: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Bouquet)]
    pub method: MethodArg,
    /// Half-width of the confidence interval [default: 0.01].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Allowed failure probability [default: 0.01].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Trace count; derived from epsilon and delta when omitted.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub max_path_length: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Flower threshold [default: max(2, isqrt(n)), or the loaded store's].
    #[arg(long)]
    pub k: Option<usize>,
    /// Flower-search probability at unannotated states [default: 0.01].
    #[arg(long)]
    pub rprob: Option<f64>,
    /// Solver convergence tolerance [default: 1e-10].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Solver iteration cap [default: 1000000].
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Annotation file: loaded if present, written back after the run.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    /// Sampling threads (smc only).
    #[arg(long, env = "BOUQUET_WORKERS", default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub states: usize,
    #[arg(long)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub p_a: f64,
    #[arg(long, default_value_t = 0.05)]
    pub p_b: f64,
    /// Append this many closed petals after the core states.
    #[arg(long, default_value_t = 0)]
    pub petal_count: usize,
    #[arg(long, default_value_t = 8)]
    pub petal_size: usize,
    #[arg(long, default_value_t = 0.6)]
    pub petal_p_a: f64,
    #[arg(long, default_value_t = 0.3)]
    pub petal_p_b: f64,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Flower threshold [default: isqrt(n)].
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// size_sweep, density_sweep, accuracy_sweep, repeat_query or io_count.
    #[arg(long)]
    pub suite: Option<String>,
    /// `key=value` suite spec; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Full experiment sizes instead of the reduced defaults.
    #[arg(long)]
    pub large: bool,
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long, alias = "density")]
    pub densities: Option<String>,
    #[arg(long, alias = "epsilon")]
    pub epsilons: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub replicates: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub rprob: Option<String>,
    /// Comma-separated: smc, bouquet_pre, bouquet_fly, nmc.
    #[arg(long)]
    pub methods: Option<String>,
    /// Semicolon-separated queries.
    #[arg(long)]
    pub formulas: Option<String>,
    #[arg(long)]
    pub batches: Option<String>,
    #[arg(long)]
    pub batch_size: Option<String>,
    #[arg(long)]
    pub p_a: Option<String>,
    #[arg(long)]
    pub p_b: Option<String>,
    #[arg(long)]
    pub petal_count: Option<String>,
    #[arg(long)]
    pub petal_size: Option<String>,
    #[arg(long)]
    pub max_path_length: Option<String>,
    /// Repeat-query replays per query; the fastest wall time is reported.
    #[arg(long)]
    pub timing_repeats: Option<String>,
    /// Replicates run in parallel on this many threads.
    #[arg(long, env = "BOUQUET_WORKERS")]
    pub workers: Option<String>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl BenchArgs {
    /// Flag values as suite-spec `key=value` pairs.
    pub fn pairs(&self) -> Vec<(&'static str, &str)> {
        let fields: [(&'static str, &Option<String>); 19] = [
            ("suite", &self.suite),
            ("sizes", &self.sizes),
            ("densities", &self.densities),
            ("epsilons", &self.epsilons),
            ("delta", &self.delta),
            ("replicates", &self.replicates),
            ("seed", &self.seed),
            ("k", &self.k),
            ("rprob", &self.rprob),
            ("methods", &self.methods),
            ("formulas", &self.formulas),
            ("batches", &self.batches),
            ("batch_size", &self.batch_size),
            ("p_a", &self.p_a),
            ("p_b", &self.p_b),
            ("petal_count", &self.petal_count),
            ("petal_size", &self.petal_size),
            ("max_path_length", &self.max_path_length),
            ("timing_repeats", &self.timing_repeats),
        ];
        let mut pairs: Vec<_> = fields
            .into_iter()
            .filter_map(|(key, value)| value.as_deref().map(|v| (key, v)))
            .collect();
        if let Some(workers) = self.workers.as_deref() {
            pairs.push(("workers", workers));
        }
        pairs
    }
}
