use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const T1: &str = "dtmc
states 3
init 0
transitions 4
0 1 0.5
0 2 0.5
1 1 1
2 2 1
labels a b
0: a
1: b
";

/// Model text for `n` states from 0 with propositions a and b.
fn chain_text(n: usize, edges: &[(usize, usize, f64)], labels: &[(usize, &str)]) -> String {
    let mut text = format!("dtmc\nstates {n}\ninit 0\ntransitions {}\n", edges.len());
    for (s, t, p) in edges {
        text.push_str(&format!("{s} {t} {p}\n"));
    }
    text.push_str("labels a b\n");
    for (s, l) in labels {
        text.push_str(&format!("{s}: {l}\n"));
    }
    text
}

fn bouquet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bouquet")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn keys(v: &Value) -> Vec<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn check_t1_with_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "t1.txt", T1);
    let nmc = json(&bouquet(&[
        "check",
        "--model",
        &model,
        "--formula",
        "P=? [ a U b ]",
        "--method",
        "nmc",
        "--json",
    ]));
    assert_eq!(nmc["estimate"], 0.5);
    assert_eq!(nmc["exact"], true);

    let bq = json(&bouquet(&[
        "check",
        "--model",
        &model,
        "--formula",
        "P=? [ a U b ]",
        "--k",
        "3",
        "--rprob",
        "1",
        "--json",
    ]));
    assert_eq!(bq["estimate"], 0.5);
    assert_eq!(bq["exact"], true);

    let smc = json(&bouquet(&[
        "check",
        "--model",
        &model,
        "--formula",
        "P=? [ a U b ]",
        "--method",
        "smc",
        "--epsilon",
        "0.05",
        "--json",
    ]));
    assert!((smc["estimate"].as_f64().unwrap() - 0.5).abs() < 0.05);
    assert_eq!(smc["samples"], 1060);

    // every method reports the same keys
    assert_eq!(keys(&nmc), keys(&bq));
    assert_eq!(keys(&nmc), keys(&smc));
}

#[test]
fn human_output_names_the_method() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "t1.txt", T1);
    let out = bouquet(&[
        "check",
        "--model",
        &model,
        "--formula",
        "P=? [ a U b ]",
        "--method",
        "nmc",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("method        nmc"));
    assert!(text.contains("exact         0.5"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "t1.txt", T1);
    let bad_formula = bouquet(&["check", "--model", &model, "--formula", "P=? [ a U"]);
    assert_eq!(bad_formula.status.code(), Some(2));
    let bad_model = write(dir.path(), "bad.txt", &chain_text(1, &[(0, 0, 0.5)], &[]));
    let out = bouquet(&["check", "--model", &bad_model, "--formula", "P=? [ a U b ]"]);
    assert_eq!(out.status.code(), Some(2));
    let missing = bouquet(&["check", "--model", "/nonexistent/model", "--formula", "P=? [ a U b ]"]);
    assert_eq!(missing.status.code(), Some(2));

    let chain = write(
        dir.path(),
        "slow.txt",
        &chain_text(2, &[(0, 0, 0.999), (0, 1, 0.001), (1, 1, 1.0)], &[(0, "a"), (1, "b")]),
    );
    let out = bouquet(&[
        "check",
        "--model",
        &chain,
        "--formula",
        "P=? [ a U b ]",
        "--method",
        "nmc",
        "--max-iter",
        "1",
        "--seed",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("--seed"), "{stderr}");
}

#[test]
fn generate_is_deterministic_and_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = bouquet(&[
            "generate",
            "--states",
            "300",
            "--density",
            "0.01",
            "--seed",
            "5",
            "--petal-count",
            "4",
            "-o",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        (
            fs::read_to_string(&path).unwrap(),
            String::from_utf8(out.stdout).unwrap(),
        )
    };
    let (first, fp1) = run("a.txt");
    let (second, fp2) = run("b.txt");
    assert_eq!(first, second);
    assert_eq!(fp1, fp2);
    assert!(fp1.starts_with("sha256 "));
    let model: bouquet_core::Dtmc = first.parse().unwrap();
    assert_eq!(model.n(), 300);

    let zero = bouquet(&["generate", "--states", "100", "--density", "0"]);
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn annotate_writes_the_expected_marks() {
    let dir = tempfile::tempdir().unwrap();
    let edges: Vec<_> = (0..10).map(|s| (s, (s + 1).min(9), 1.0)).collect();
    let labels: Vec<_> = (0..10).map(|s| (s, if s == 9 { "b" } else { "a" })).collect();
    let model = write(dir.path(), "l10.txt", &chain_text(10, &edges, &labels));
    let out_path = dir.path().join("l10.ann");
    let out = bouquet(&[
        "annotate",
        "--model",
        &model,
        "--k",
        "6",
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let ann = fs::read_to_string(&out_path).unwrap();
    assert_eq!(ann.lines().filter(|l| l.ends_with(" notflower")).count(), 4);
    assert_eq!(ann.lines().filter(|l| l.contains(" flower")).count(), 6);

    let out = bouquet(&["annotate", "--model", &model, "-o", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(fs::read_to_string(&out_path).unwrap().lines().any(|l| l == "k 3"));

    let out = bouquet(&["annotate", "--model", &model, "-o", "/nonexistent/dir/out.ann"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn annotations_are_reused_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "t1.txt", T1);
    let ann = dir.path().join("t1.ann");
    let args = |extra: &[&str]| {
        let mut v = vec![
            "check",
            "--model",
            &model,
            "--formula",
            "P=? [ a U b ]",
            "--json",
            "--rprob",
            "1",
        ];
        v.extend_from_slice(extra);
        v.extend(["--annotations", ann.to_str().unwrap()]);
        v.into_iter().map(String::from).collect::<Vec<_>>()
    };
    let run = |a: Vec<String>| json(&Command::new(env!("CARGO_BIN_EXE_bouquet")).args(a).output().unwrap());
    let first = run(args(&["--k", "3"]));
    assert_eq!(first["flower"]["nmc_solves"], 1);
    let second = run(args(&[]));
    assert_eq!(second["flower"]["k"], 3);
    assert_eq!(second["flower"]["nmc_solves"], 0);
    assert_eq!(second["flower"]["reach_searches"], 0);
    assert_eq!(first["estimate"], second["estimate"]);

    let clash = Command::new(env!("CARGO_BIN_EXE_bouquet"))
        .args(args(&["--k", "2"]))
        .output()
        .unwrap();
    assert_eq!(clash.status.code(), Some(2));
}

#[test]
fn bench_rejects_unknown_suites_and_emits_a_header() {
    let out = bouquet(&["bench", "--suite", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("size_sweep"));

    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "spec.txt",
        "suite = size_sweep\nsizes = 100\nreplicates = 3\n",
    );
    let out = bouquet(&[
        "bench",
        "--config",
        &config,
        "--replicates",
        "1",
        "--epsilon",
        "0.1",
        "--delta",
        "0.1",
        "--methods",
        "smc",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), bouquet_bench::Row::COLUMNS.join(","));
    assert_eq!(lines.count(), 1);
}
