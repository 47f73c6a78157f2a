use std::hint::black_box;

use bouquet_core::{
    bouquet_estimate, estimate, generate_random_dtmc, parse_formula, pre_annotate, solve_until, AnnotationStore,
    BouquetParams, GeneratorConfig, NmcOptions, PetalConfig, SamplingPlan,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const SAMPLES: usize = 2000;

fn engines(c: &mut Criterion) {
    let q = parse_formula("P=? [ a U b ]").unwrap();
    let mut group = c.benchmark_group("engines");
    group.sample_size(20);
    for n in [1000usize, 10_000] {
        let model = generate_random_dtmc(&GeneratorConfig::new(n, 0.05, 7)).unwrap();
        let params = BouquetParams {
            samples: SAMPLES * 7 / 10,
            ..BouquetParams::new(n, 0.01, 0.01, 3).unwrap()
        };
        let annotated = pre_annotate(&model, params.k);
        let plan = SamplingPlan::auto(0.01, 0.01, 3).unwrap().with_samples(SAMPLES);

        group.bench_with_input(BenchmarkId::new("smc", n), &model, |b, m| {
            b.iter(|| estimate(m, &q, &plan).unwrap().estimate)
        });
        group.bench_with_input(BenchmarkId::new("bouquet_pre", n), &model, |b, m| {
            b.iter_batched(
                || annotated.clone(),
                |mut store| bouquet_estimate(m, &q, &params, &mut store).unwrap().estimate,
                criterion::BatchSize::LargeInput,
            )
        });
        group.bench_with_input(BenchmarkId::new("bouquet_fly", n), &model, |b, m| {
            b.iter_batched(
                || AnnotationStore::new(n, params.k),
                |mut store| bouquet_estimate(m, &q, &params, &mut store).unwrap().estimate,
                criterion::BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn structure(c: &mut Criterion) {
    let q = parse_formula("P=? [ a U b ]").unwrap();
    let petals = PetalConfig {
        count: 100,
        size: 10,
        p_a: 0.6,
        p_b: 0.3,
    };
    let model = generate_random_dtmc(&GeneratorConfig::new(10_000, 0.0005, 5).with_petals(petals)).unwrap();
    c.bench_function("pre_annotate/10000", |b| {
        b.iter(|| pre_annotate(black_box(&model), 100))
    });
    c.bench_function("nmc/10000", |b| {
        b.iter(|| {
            solve_until(black_box(&model), &q, NmcOptions::default())
                .unwrap()
                .iterations
        })
    });
}

criterion_group!(benches, engines, structure);
criterion_main!(benches);
