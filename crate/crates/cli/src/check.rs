use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use bouquet_core::{
    bouquet_estimate, bouquet_samples, default_k, estimate_with_workers, load_annotations, parse_formula, parse_model,
    required_samples, save_annotations, solve_until, AnnotationStore, BouquetError, BouquetParams, Dtmc,
    EstimationResult, ModelFingerprint, NmcError, NmcOptions, SamplingPlan, StoreError, UntilQuery,
    DEFAULT_MAX_PATH_LENGTH,
};
use serde::Serialize;

use crate::args::{CheckArgs, MethodArg};
use crate::CliError;

const DEFAULT_EPSILON: f64 = 0.01;
const DEFAULT_DELTA: f64 = 0.01;
const DEFAULT_R_PROB: f64 = 0.01;

/// Report printed by `check`. Every key is present for every method;
/// inapplicable ones are null.
#[derive(Debug, Serialize)]
pub struct Report {
    pub method: &'static str,
    pub formula: String,
    pub model_fingerprint: String,
    pub states: usize,
    pub initial_state: usize,
    pub estimate: f64,
    pub exact: bool,
    pub samples: Option<usize>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub max_path_length: Option<usize>,
    pub tally: Option<TallyReport>,
    pub mean_trace_length: Option<f64>,
    pub flower: Option<FlowerReport>,
    pub solver: Option<SolverReport>,
    pub wall_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct TallyReport {
    pub true_count: u64,
    pub false_count: u64,
    pub inconclusive: u64,
    pub flower_resolved: u64,
}

#[derive(Debug, Serialize)]
pub struct FlowerReport {
    pub k: usize,
    pub r_prob: f64,
    pub mean_stalk_length: Option<f64>,
    pub reach_searches: u64,
    pub flowers_built: u64,
    pub nmc_solves: u64,
    pub cache_hits: u64,
    pub annotated_states: usize,
}

#[derive(Debug, Serialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub residual: f64,
    pub tol: f64,
}

pub fn load_model(path: &Path) -> Result<Dtmc, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn warn_ignored(args: &CheckArgs) {
    let given = |name: &str, set: bool| (set).then(|| name.to_string());
    let sampling = [
        given("--epsilon", args.epsilon.is_some()),
        given("--delta", args.delta.is_some()),
        given("--samples", args.samples.is_some()),
        given("--max-path-length", args.max_path_length.is_some()),
        given("--seed", args.seed.is_some()),
    ];
    let bouquet = [
        given("--k", args.k.is_some()),
        given("--rprob", args.rprob.is_some()),
        given("--annotations", args.annotations.is_some()),
    ];
    let solver = [
        given("--tol", args.tol.is_some()),
        given("--max-iter", args.max_iter.is_some()),
    ];
    let ignored: Vec<String> = match args.method {
        MethodArg::Nmc => sampling.into_iter().chain(bouquet).flatten().collect(),
        MethodArg::Smc => bouquet.into_iter().chain(solver).flatten().collect(),
        MethodArg::Bouquet => Vec::new(),
    };
    for flag in ignored {
        eprintln!(
            "warning: {flag} does not apply to --method {} and is ignored",
            args.method.name()
        );
    }
    if args.workers > 1 && args.method != MethodArg::Smc {
        eprintln!("warning: --workers only parallelizes --method smc; running single-threaded");
    }
}

fn nmc_error(e: NmcError) -> CliError {
    match e {
        NmcError::NotConverged { .. } => CliError::numeric(e.to_string()),
        other => CliError::input(other.to_string()),
    }
}

fn bouquet_error(e: BouquetError) -> CliError {
    match e {
        BouquetError::Nmc(inner) => nmc_error(inner),
        other => CliError::input(other.to_string()),
    }
}

pub fn run(args: &CheckArgs) -> Result<Report, CliError> {
    warn_ignored(args);
    let model = load_model(&args.model)?;
    let q = parse_formula(&args.formula).map_err(|e| CliError::input(format!("formula: {e}")))?;
    let fingerprint = ModelFingerprint::of(&model);
    let opts = NmcOptions {
        tol: args.tol.unwrap_or(NmcOptions::default().tol),
        max_iter: args.max_iter.unwrap_or(NmcOptions::default().max_iter),
    };
    let mut report = Report {
        method: args.method.name(),
        formula: q.to_string(),
        model_fingerprint: fingerprint.to_hex(),
        states: model.n(),
        initial_state: model.initial(),
        estimate: 0.0,
        exact: false,
        samples: None,
        epsilon: None,
        delta: None,
        seed: None,
        max_path_length: None,
        tally: None,
        mean_trace_length: None,
        flower: None,
        solver: None,
        wall_ms: 0.0,
    };
    match args.method {
        MethodArg::Nmc => {
            let start = Instant::now();
            let solved = solve_until(&model, &q, opts).map_err(nmc_error)?;
            report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
            if !solved.converged {
                return Err(CliError::numeric(format!(
                    "solver did not converge after {} iterations (residual {:e})",
                    solved.iterations, solved.residual
                )));
            }
            report.estimate = solved.values[model.initial()];
            report.exact = true;
            report.solver = Some(SolverReport {
                iterations: solved.iterations,
                residual: solved.residual,
                tol: opts.tol,
            });
        }
        MethodArg::Smc => {
            let plan = sampling_plan(args)?;
            let result = estimate_with_workers(&model, &q, &plan, args.workers.max(1))
                .map_err(|e| CliError::input(e.to_string()))?;
            fill_sampling(&mut report, &result, &plan);
        }
        MethodArg::Bouquet => run_bouquet(args, &model, &q, &fingerprint, opts, &mut report)?,
    }
    Ok(report)
}

fn sampling_plan(args: &CheckArgs) -> Result<SamplingPlan, CliError> {
    let epsilon = args.epsilon.unwrap_or(DEFAULT_EPSILON);
    let delta = args.delta.unwrap_or(DEFAULT_DELTA);
    let samples = match args.samples {
        Some(samples) => samples,
        None => required_samples(epsilon, delta).map_err(|e| CliError::input(e.to_string()))?,
    };
    Ok(SamplingPlan {
        epsilon,
        delta,
        max_path_length: args.max_path_length.unwrap_or(DEFAULT_MAX_PATH_LENGTH),
        samples,
        seed: args.seed.unwrap_or(0),
    })
}

fn fill_sampling(report: &mut Report, result: &EstimationResult, plan: &SamplingPlan) {
    report.estimate = result.estimate;
    report.samples = Some(result.samples_used);
    report.epsilon = Some(result.epsilon);
    report.delta = Some(result.delta);
    report.seed = Some(plan.seed);
    report.max_path_length = Some(plan.max_path_length);
    report.tally = Some(TallyReport {
        true_count: result.tally.true_count,
        false_count: result.tally.false_count,
        inconclusive: result.tally.inconclusive,
        flower_resolved: result.tally.flower_resolved,
    });
    report.mean_trace_length = Some(result.mean_trace_length);
    report.wall_ms = result.wall_time.as_secs_f64() * 1e3;
}

fn store_error(path: &Path, e: StoreError) -> CliError {
    CliError::input(format!("{}: {e}", path.display()))
}

fn run_bouquet(
    args: &CheckArgs,
    model: &Dtmc,
    q: &UntilQuery,
    fingerprint: &ModelFingerprint,
    opts: NmcOptions,
    report: &mut Report,
) -> Result<(), CliError> {
    let mut store = match &args.annotations {
        Some(path) if path.exists() => {
            let file = fs::File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            Some(
                load_annotations(std::io::BufReader::new(file), fingerprint, args.k)
                    .map_err(|e| store_error(path, e))?,
            )
        }
        _ => None,
    };
    let k = args
        .k
        .or_else(|| store.as_ref().map(AnnotationStore::k))
        .unwrap_or_else(|| default_k(model.n()));
    let store = store.get_or_insert_with(|| AnnotationStore::new(model.n(), k));

    let mut plan = sampling_plan(args)?;
    if args.samples.is_none() {
        plan.samples = bouquet_samples(plan.samples);
    }
    let params = BouquetParams {
        k,
        r_prob: args.rprob.unwrap_or(DEFAULT_R_PROB),
        samples: plan.samples,
        epsilon: plan.epsilon,
        delta: plan.delta,
        max_path_length: plan.max_path_length,
        seed: plan.seed,
        nmc: opts,
    };
    let result = bouquet_estimate(model, q, &params, store).map_err(bouquet_error)?;
    fill_sampling(report, &result, &plan);
    report.exact = result.tally.flower_resolved == result.samples_used as u64;
    report.flower = Some(FlowerReport {
        k,
        r_prob: params.r_prob,
        mean_stalk_length: result.mean_stalk_length,
        reach_searches: store.counters.reach_searches,
        flowers_built: store.counters.flowers_built,
        nmc_solves: store.counters.nmc_solves,
        cache_hits: store.counters.cache_hits,
        annotated_states: store.annotated_count(),
    });

    if let Some(path) = &args.annotations {
        let file = fs::File::create(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        save_annotations(store, fingerprint, std::io::BufWriter::new(file)).map_err(|e| store_error(path, e))?;
    }
    Ok(())
}

pub fn write_human(report: &Report, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "method        {}", report.method)?;
    writeln!(out, "formula       {}", report.formula)?;
    writeln!(
        out,
        "model         sha256 {} ({} states)",
        report.model_fingerprint, report.states
    )?;
    let kind = if report.exact { "exact" } else { "estimate" };
    writeln!(out, "{kind:<13} {}", report.estimate)?;
    if let (Some(samples), Some(epsilon), Some(delta)) = (report.samples, report.epsilon, report.delta) {
        writeln!(
            out,
            "samples       {samples} (epsilon {epsilon}, delta {delta}, seed {})",
            report.seed.unwrap_or(0)
        )?;
    }
    if let (Some(tally), Some(len)) = (&report.tally, report.mean_trace_length) {
        writeln!(
            out,
            "traces        {} true, {} false, {} inconclusive, {} at flowers; mean length {len:.3}",
            tally.true_count, tally.false_count, tally.inconclusive, tally.flower_resolved
        )?;
    }
    if let Some(flower) = &report.flower {
        let stalk = flower
            .mean_stalk_length
            .map_or_else(|| "-".to_string(), |s| format!("{s:.3}"));
        writeln!(
            out,
            "flowers       k {}, rprob {}, mean stalk {stalk}, {} searches, {} built, {} solves, {} cache hits, {} states annotated",
            flower.k,
            flower.r_prob,
            flower.reach_searches,
            flower.flowers_built,
            flower.nmc_solves,
            flower.cache_hits,
            flower.annotated_states
        )?;
    }
    if let Some(solver) = &report.solver {
        writeln!(
            out,
            "solver        {} iterations, residual {:e}, tol {:e}",
            solver.iterations, solver.residual, solver.tol
        )?;
    }
    writeln!(out, "wall time     {:.3} ms", report.wall_ms)?;
    Ok(())
}
