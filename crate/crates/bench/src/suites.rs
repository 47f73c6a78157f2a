use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use bouquet_core::{
    bouquet_estimate, bouquet_samples, default_k, estimate, generate_random_dtmc, parse_formula, pre_annotate,
    required_samples, solve_until, AnnotationStore, BouquetParams, Dtmc, EstimationResult, FlowerMark, GeneratorConfig,
    Metered, NmcOptions, SamplingPlan, UntilQuery,
};
use serde::Serialize;

use crate::io::IoCostReport;
use crate::spec::{Method, Suite, SuiteSpec};
use crate::BenchError;

/// One CSV row. Empty cells mean "not applicable to this run".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub suite: &'static str,
    pub n: usize,
    pub rho: f64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub k: Option<usize>,
    pub rprob: Option<f64>,
    pub seed: u64,
    pub replicate: usize,
    pub query: Option<usize>,
    pub batch: Option<String>,
    pub method: &'static str,
    pub annotation_mode: Option<&'static str>,
    pub estimate: Option<f64>,
    pub exact: Option<f64>,
    pub abs_error: Option<f64>,
    pub samples: Option<usize>,
    pub wall_ms: f64,
    pub mean_trace_len: Option<f64>,
    pub mean_stalk_len: Option<f64>,
    pub flower_resolved: Option<u64>,
    pub fetches: Option<u64>,
    pub reach_searches: Option<u64>,
    /// Searches started at states already annotated when the query began.
    pub known_searches: Option<u64>,
    pub predicted_savings: Option<f64>,
    pub error: Option<String>,
}

impl Row {
    pub const COLUMNS: [&'static str; 26] = [
        "suite",
        "n",
        "rho",
        "epsilon",
        "delta",
        "k",
        "rprob",
        "seed",
        "replicate",
        "query",
        "batch",
        "method",
        "annotation_mode",
        "estimate",
        "exact",
        "abs_error",
        "samples",
        "wall_ms",
        "mean_trace_len",
        "mean_stalk_len",
        "flower_resolved",
        "fetches",
        "reach_searches",
        "known_searches",
        "predicted_savings",
        "error",
    ];
}

/// Writes the header and `rows` as CSV.
pub fn write_csv<W: Write>(rows: &[Row], sink: W) -> Result<(), BenchError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    writer.write_record(Row::COLUMNS)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Runs every configuration and replicate of `spec`. Rows come back in
/// configuration, then replicate order regardless of `spec.workers`.
pub fn run_experiment(spec: &SuiteSpec) -> Result<Vec<Row>, BenchError> {
    spec.check()?;
    let queries = spec
        .formulas
        .iter()
        .map(|f| parse_formula(f).map_err(|e| BenchError::Formula(f.clone(), e)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut jobs = Vec::new();
    let configs: Vec<(usize, f64)> = match spec.suite {
        Suite::DensitySweep => spec
            .sizes
            .iter()
            .flat_map(|&n| spec.densities.iter().map(move |&r| (n, r)))
            .collect(),
        _ => spec.sizes.iter().map(|&n| (n, spec.densities[0])).collect(),
    };
    for (n, rho) in configs {
        for replicate in 0..spec.replicates {
            jobs.push(Job { n, rho, replicate });
        }
    }

    let results: Vec<Mutex<Vec<Row>>> = jobs.iter().map(|_| Mutex::new(Vec::new())).collect();
    let next = AtomicUsize::new(0);
    let workers = spec.workers.clamp(1, jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let rows = job.run(spec, &queries);
                *results[i].lock().expect("row buffer poisoned") = rows;
            });
        }
    });
    Ok(results
        .into_iter()
        .flat_map(|m| m.into_inner().expect("row buffer poisoned"))
        .collect())
}

struct Job {
    n: usize,
    rho: f64,
    replicate: usize,
}

/// Per-run context shared by all rows of one replicate.
struct Ctx<'a> {
    spec: &'a SuiteSpec,
    job: &'a Job,
    seed: u64,
    k: usize,
}

impl Ctx<'_> {
    fn row(&self, method: Method) -> Row {
        let sampling = method != Method::Nmc;
        let bouquet = matches!(method, Method::BouquetPre | Method::BouquetFly);
        Row {
            suite: self.spec.suite.name(),
            n: self.job.n,
            rho: self.job.rho,
            epsilon: None,
            delta: sampling.then_some(self.spec.delta),
            k: bouquet.then_some(self.k),
            rprob: bouquet.then_some(self.spec.r_prob),
            seed: self.seed,
            replicate: self.job.replicate,
            query: None,
            batch: None,
            method: method.engine(),
            annotation_mode: method.annotation_mode(),
            estimate: None,
            exact: None,
            abs_error: None,
            samples: None,
            wall_ms: 0.0,
            mean_trace_len: None,
            mean_stalk_len: None,
            flower_resolved: None,
            fetches: None,
            reach_searches: None,
            known_searches: None,
            predicted_savings: None,
            error: None,
        }
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Seed of batch `b` under `seed` (splitmix64 finalizer).
fn batch_seed(seed: u64, b: usize) -> u64 {
    let mut z = seed.wrapping_add((b as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fill(row: &mut Row, result: &EstimationResult, fetches: u64) {
    row.estimate = Some(result.estimate);
    row.samples = Some(result.samples_used);
    row.wall_ms = ms(result.wall_time);
    row.mean_trace_len = Some(result.mean_trace_length);
    row.mean_stalk_len = result.mean_stalk_length;
    row.flower_resolved = Some(result.tally.flower_resolved);
    row.fetches = Some(fetches);
    if let Some(exact) = row.exact {
        row.abs_error = Some((result.estimate - exact).abs());
    }
}

fn pooled(mut template: Row, batches: &[Row]) -> Row {
    let samples: usize = batches.iter().filter_map(|r| r.samples).sum();
    let weighted = |f: fn(&Row) -> Option<f64>| -> Option<f64> {
        let mut total = 0.0;
        for r in batches {
            total += f(r)? * r.samples? as f64;
        }
        Some(total / samples as f64)
    };
    template.batch = Some("pooled".to_string());
    template.estimate = weighted(|r| r.estimate);
    template.samples = Some(samples);
    template.wall_ms = batches.iter().map(|r| r.wall_ms).sum();
    template.mean_trace_len = weighted(|r| r.mean_trace_len);
    template.flower_resolved = batches.iter().map(|r| r.flower_resolved).sum();
    template.fetches = batches.iter().map(|r| r.fetches).sum();
    template.reach_searches = batches.iter().map(|r| r.reach_searches).sum();
    let flowers: u64 = template.flower_resolved.unwrap_or(0);
    template.mean_stalk_len = (flowers > 0).then(|| {
        batches
            .iter()
            .map(|r| r.mean_stalk_len.unwrap_or(0.0) * r.flower_resolved.unwrap_or(0) as f64)
            .sum::<f64>()
            / flowers as f64
    });
    if let (Some(e), Some(x)) = (template.estimate, template.exact) {
        template.abs_error = Some((e - x).abs());
    }
    template.error = batches.iter().find_map(|r| r.error.clone());
    template
}

impl Job {
    fn run(&self, spec: &SuiteSpec, queries: &[UntilQuery]) -> Vec<Row> {
        let seed = spec.seed.wrapping_add(self.replicate as u64);
        let ctx = Ctx {
            spec,
            job: self,
            seed,
            k: spec.k.unwrap_or_else(|| default_k(self.n)),
        };
        let mut cfg = GeneratorConfig::new(self.n, self.rho, seed).with_labels(spec.p_a, spec.p_b);
        cfg.petals = spec.petals;
        let model = match generate_random_dtmc(&cfg) {
            Ok(model) => model,
            Err(e) => {
                return spec
                    .methods
                    .iter()
                    .map(|&m| Row {
                        error: Some(e.to_string()),
                        ..ctx.row(m)
                    })
                    .collect()
            }
        };
        match spec.suite {
            Suite::RepeatQuery => repeat_query(&ctx, &model, queries),
            Suite::IoCount => io_count(&ctx, &model, &queries[0]),
            Suite::SizeSweep | Suite::DensitySweep | Suite::AccuracySweep => sweep(&ctx, &model, &queries[0]),
        }
    }
}

/// Exact value at the initial state, with solve time, when NMC is requested.
fn exact_value(ctx: &Ctx, model: &Dtmc, q: &UntilQuery) -> Option<(Result<f64, String>, Duration)> {
    if !ctx.spec.methods.contains(&Method::Nmc) {
        return None;
    }
    let start = Instant::now();
    let value = match solve_until(model, q, NmcOptions::default()) {
        Ok(v) if v.converged => Ok(v.values[model.initial()]),
        Ok(v) => Err(format!("not converged after {} iterations", v.iterations)),
        Err(e) => Err(e.to_string()),
    };
    Some((value, start.elapsed()))
}

fn sweep(ctx: &Ctx, model: &Dtmc, q: &UntilQuery) -> Vec<Row> {
    let exact = exact_value(ctx, model, q);
    let exact_ok = exact.as_ref().and_then(|(v, _)| v.as_ref().ok().copied());
    let pre_store = ctx
        .spec
        .methods
        .contains(&Method::BouquetPre)
        .then(|| pre_annotate(model, ctx.k));
    let mut rows = Vec::new();
    for &epsilon in &ctx.spec.epsilons {
        for &method in &ctx.spec.methods {
            let mut template = ctx.row(method);
            template.exact = exact_ok;
            if method == Method::Nmc {
                let (value, time) = exact.clone().expect("nmc requested");
                template.wall_ms = ms(time);
                match value {
                    Ok(v) => {
                        template.estimate = Some(v);
                        template.abs_error = Some(0.0);
                    }
                    Err(e) => template.error = Some(e),
                }
                rows.push(template);
                continue;
            }
            template.epsilon = Some(epsilon);
            let store = match method {
                Method::BouquetPre => pre_store.clone(),
                _ => None,
            };
            rows.extend(sampling_rows(ctx, model, q, method, epsilon, template, store));
        }
    }
    rows
}

/// One row per sampling run, or per batch plus a pooled row when batching.
fn sampling_rows(
    ctx: &Ctx,
    model: &Dtmc,
    q: &UntilQuery,
    method: Method,
    epsilon: f64,
    template: Row,
    store: Option<AnnotationStore>,
) -> Vec<Row> {
    let spec = ctx.spec;
    let full = match required_samples(epsilon, spec.delta) {
        Ok(n) => n,
        Err(e) => {
            return vec![Row {
                error: Some(e.to_string()),
                ..template
            }]
        }
    };
    let mut store = store.unwrap_or_else(|| AnnotationStore::new(model.n(), ctx.k));
    let metered = Metered::new(model);
    let mut run = |samples: usize, seed: u64, mut row: Row| -> Row {
        metered.reset();
        let searches = store.counters.reach_searches;
        let result = match method {
            Method::Smc => {
                let plan = SamplingPlan {
                    epsilon,
                    delta: spec.delta,
                    max_path_length: spec.max_path_length,
                    samples,
                    seed,
                };
                estimate(&metered, q, &plan).map_err(|e| e.to_string())
            }
            _ => {
                let params = BouquetParams {
                    k: ctx.k,
                    r_prob: spec.r_prob,
                    samples: bouquet_samples(samples),
                    epsilon,
                    delta: spec.delta,
                    max_path_length: spec.max_path_length,
                    seed,
                    nmc: NmcOptions::default(),
                };
                let result = bouquet_estimate(&metered, q, &params, &mut store).map_err(|e| e.to_string());
                row.reach_searches = Some(store.counters.reach_searches - searches);
                result
            }
        };
        match result {
            Ok(result) => fill(&mut row, &result, metered.fetches()),
            Err(e) => row.error = Some(e),
        }
        row
    };

    match (spec.batches, spec.batch_size) {
        (Some(batches), Some(size)) => {
            let mut rows: Vec<Row> = (0..batches)
                .map(|b| {
                    run(
                        size,
                        batch_seed(ctx.seed, b),
                        Row {
                            batch: Some(b.to_string()),
                            ..template.clone()
                        },
                    )
                })
                .collect();
            rows.push(pooled(template, &rows));
            rows
        }
        _ => vec![run(full, ctx.seed, template)],
    }
}

fn repeat_query(ctx: &Ctx, model: &Dtmc, queries: &[UntilQuery]) -> Vec<Row> {
    let spec = ctx.spec;
    let metered = Metered::new(model);
    let mut rows = Vec::new();
    for &epsilon in &spec.epsilons {
        let params = BouquetParams::new(model.n(), epsilon, spec.delta, ctx.seed).map(|p| BouquetParams {
            k: ctx.k,
            r_prob: spec.r_prob,
            max_path_length: spec.max_path_length,
            ..p
        });
        let mut store = AnnotationStore::new(model.n(), ctx.k);
        store.record_searches();
        // store as each query found it, for the timing replays
        let mut before = Vec::with_capacity(queries.len());
        let first = rows.len();
        for (i, q) in queries.iter().enumerate() {
            let mut row = ctx.row(Method::BouquetFly);
            row.epsilon = Some(epsilon);
            row.query = Some(i + 1);
            if let Some((value, _)) = exact_value(ctx, model, q) {
                row.exact = value.ok();
            }
            before.push(store.clone());
            let known: Vec<bool> = store.marks().iter().map(|&m| m != FlowerMark::Unknown).collect();
            let searches = store.counters.reach_searches;
            metered.reset();
            let result = params
                .clone()
                .and_then(|params| bouquet_estimate(&metered, q, &params, &mut store));
            let log = store.take_search_log();
            row.reach_searches = Some(store.counters.reach_searches - searches);
            row.known_searches = Some(log.iter().filter(|&&s| known[s]).count() as u64);
            match result {
                Ok(result) => fill(&mut row, &result, metered.fetches()),
                Err(e) => row.error = Some(e.to_string()),
            }
            rows.push(row);
        }
        let Ok(params) = params else { continue };
        // replay rounds visit every query in turn so drift hits all alike
        for _ in 1..spec.timing_repeats {
            for ((q, start), row) in queries.iter().zip(&before).zip(&mut rows[first..]) {
                let mut copy = start.clone();
                if let Ok(result) = bouquet_estimate(model, q, &params, &mut copy) {
                    row.wall_ms = row.wall_ms.min(result.wall_time.as_secs_f64() * 1e3);
                }
            }
        }
    }
    rows
}

/// Pre-annotated, cache-warm bouquet run against plain sampling with the
/// same trace count and seed, so both walk the same paths.
fn io_count(ctx: &Ctx, model: &Dtmc, q: &UntilQuery) -> Vec<Row> {
    let spec = ctx.spec;
    let mut rows = Vec::new();
    for &epsilon in &spec.epsilons {
        let mut smc_row = ctx.row(Method::Smc);
        let mut bq_row = ctx.row(Method::BouquetPre);
        smc_row.epsilon = Some(epsilon);
        bq_row.epsilon = Some(epsilon);
        let params = match BouquetParams::new(model.n(), epsilon, spec.delta, ctx.seed) {
            Ok(p) => BouquetParams {
                k: ctx.k,
                r_prob: spec.r_prob,
                max_path_length: spec.max_path_length,
                ..p
            },
            Err(e) => {
                smc_row.error = Some(e.to_string());
                bq_row.error = Some(e.to_string());
                rows.extend([smc_row, bq_row]);
                continue;
            }
        };
        let mut store = pre_annotate(model, ctx.k);
        let metered = Metered::new(model);
        let outcome = bouquet_estimate(&metered, q, &params, &mut store).and_then(|_| {
            metered.reset();
            bouquet_estimate(&metered, q, &params, &mut store)
        });
        let bouquet = match outcome {
            Ok(result) => result,
            Err(e) => {
                bq_row.error = Some(e.to_string());
                rows.extend([smc_row, bq_row]);
                continue;
            }
        };
        let bouquet_fetches = metered.fetches();
        bq_row.reach_searches = Some(store.counters.reach_searches);
        fill(&mut bq_row, &bouquet, bouquet_fetches);

        metered.reset();
        let plan = SamplingPlan {
            epsilon,
            delta: spec.delta,
            max_path_length: spec.max_path_length,
            samples: params.samples,
            seed: ctx.seed,
        };
        match estimate(&metered, q, &plan) {
            Ok(smc) => {
                fill(&mut smc_row, &smc, metered.fetches());
                let report = IoCostReport::new(&smc, &bouquet, bouquet_fetches, ctx.k);
                bq_row.predicted_savings = Some(report.predicted_savings);
            }
            Err(e) => smc_row.error = Some(e.to_string()),
        }
        rows.extend([smc_row, bq_row]);
    }
    rows
}
