use bouquet_bench::{io_savings_predicted, run_experiment, write_csv, Method, Row, Suite, SuiteSpec};

fn strip_timing(rows: Vec<Row>) -> Vec<Row> {
    rows.into_iter().map(|r| Row { wall_ms: 0.0, ..r }).collect()
}

#[test]
fn config_driven_size_sweep() {
    let spec = SuiteSpec::from_config(
        "suite=size_sweep\nsizes=100,300\ndensity=0.05\nreplicates=3\nepsilon=0.1\ndelta=0.1\nmethods=smc,bouquet_pre,bouquet_fly,nmc\n",
    )
    .unwrap();
    let rows = run_experiment(&spec).unwrap();
    assert_eq!(rows.len(), 2 * 3 * 4);
    for row in &rows {
        assert!(row.error.is_none());
        let exact = row.exact.unwrap();
        assert!((0.0..=1.0).contains(&exact));
        if row.method != "nmc" {
            assert!((row.estimate.unwrap() - exact).abs() == row.abs_error.unwrap());
        }
    }
    let bouquet_samples = rows
        .iter()
        .find(|r| r.method == "bouquet")
        .and_then(|r| r.samples)
        .unwrap();
    let smc_samples = rows.iter().find(|r| r.method == "smc").and_then(|r| r.samples).unwrap();
    assert_eq!(smc_samples, 150);
    assert_eq!(bouquet_samples, 105);
}

#[test]
fn density_sweep_crosses_sizes_and_densities() {
    let spec = SuiteSpec {
        sizes: vec![200],
        densities: vec![0.01, 0.05],
        epsilons: vec![0.1],
        delta: 0.1,
        replicates: 2,
        methods: vec![Method::Smc],
        ..SuiteSpec::defaults(Suite::DensitySweep, false)
    };
    let rows = run_experiment(&spec).unwrap();
    let rhos: Vec<f64> = rows.iter().map(|r| r.rho).collect();
    assert_eq!(rhos, vec![0.01, 0.01, 0.05, 0.05]);
}

#[test]
fn csv_is_byte_identical_apart_from_timing() {
    let spec = SuiteSpec {
        sizes: vec![300],
        epsilons: vec![0.1, 0.05],
        delta: 0.1,
        replicates: 2,
        workers: 2,
        ..SuiteSpec::defaults(Suite::AccuracySweep, false)
    };
    let render = || {
        let mut out = Vec::new();
        write_csv(&strip_timing(run_experiment(&spec).unwrap()), &mut out).unwrap();
        out
    };
    assert_eq!(render(), render());
}

#[test]
fn io_count_matches_the_cost_model() {
    let spec = SuiteSpec {
        replicates: 3,
        ..SuiteSpec::defaults(Suite::IoCount, false)
    };
    let rows = run_experiment(&spec).unwrap();
    for pair in rows.chunks(2) {
        let (smc, bq) = (&pair[0], &pair[1]);
        assert_eq!((smc.method, bq.method), ("smc", "bouquet"));
        assert_eq!(smc.samples, bq.samples);
        let n = bq.samples.unwrap() as u64;
        assert_eq!(bq.flower_resolved, Some(n));
        let measured = smc.fetches.unwrap() as f64 - bq.fetches.unwrap() as f64;
        let model = io_savings_predicted(
            n,
            bq.flower_resolved.unwrap(),
            smc.mean_trace_len.unwrap(),
            bq.mean_stalk_len.unwrap(),
            0,
        );
        assert!((measured - model).abs() <= 1e-9 * measured, "{measured} vs {model}");
        assert_eq!(bq.predicted_savings.unwrap(), model - bq.k.unwrap() as f64);
    }
}

#[test]
fn bad_specs_are_rejected() {
    let spec = SuiteSpec {
        formulas: vec!["P=? [ a U".into()],
        ..SuiteSpec::defaults(Suite::SizeSweep, false)
    };
    assert!(run_experiment(&spec).is_err());
    let spec = SuiteSpec {
        replicates: 0,
        ..SuiteSpec::defaults(Suite::SizeSweep, false)
    };
    assert!(run_experiment(&spec).is_err());
}
