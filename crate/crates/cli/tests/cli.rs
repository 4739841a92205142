//! End-to-end runs of the `bdcluster` binary.

use std::process::{Command, Output};

use bdcluster::quiver::QuiverJson;
use bdcluster::seed_builder::SeedSummary;
use bdcluster::{ClusterSeed, Quiver};

const GL5: [&str; 6] = ["--n", "5", "--gamma-r", "1:2,2:3", "--gamma-c", "1:3,2:4"];

fn bdcluster(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdcluster")).args(args).output().expect("binary runs")
}

fn with(base: &[&str], extra: &[&str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(args: &[String]) -> Output {
    bdcluster(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn verify_gl5_passes_with_lambda_one() {
    let mut args = with(&["verify"], &GL5);
    args.extend(["--points", "3", "--rng", "42"].map(String::from));
    let o = run(&args);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("lambda = 1"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn verify_json_report() {
    let o = run(&with(&["verify", "--format", "json"], &GL5));
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["lambda"], "1");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn verify_gl8_reports_the_cycle() {
    let o = bdcluster(&["verify", "--n", "8", "--gamma-r", "2:3,6:7", "--gamma-c", "6:1,2:5"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(1), "{text}");
    assert!(text.contains("FAIL aperiodicity: alternating cycle"), "{text}");
    for v in ["6", "2", "3'", "5'", "7'", "1'"] {
        assert!(text.contains(v));
    }
}

#[test]
fn trivial_quiver_dot_shapes() {
    let o = bdcluster(&["quiver", "--n", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("shape=box").count(), 5);
    assert_eq!(dot.matches("shape=circle").count(), 4);
}

#[test]
fn invalid_input_exits_with_two() {
    let cases: [&[&str]; 6] = [
        &["graph", "--n", "4", "--gamma-r", "1:1"],
        &["graph", "--n", "4", "--gamma-r", "1-2"],
        &["graph", "--n", "4", "--gamma-r", "1:5"],
        &["seed", "--n", "5", "--format", "dot"],
        &["mutate", "--n", "3", "--at", "(1,1)"],
        &["laurent", "--n", "5", "--run", "1..2", "--dir", "left"],
    ];
    for args in cases {
        let o = bdcluster(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("error:"), "{args:?}");
    }
    let o = bdcluster(&["graph", "--n", "4", "--gamma-r", "1:2,1:3"]);
    assert!(stderr(&o).contains("position 5"), "{}", stderr(&o));
    let o = bdcluster(&["graph", "--n", "4", "--gamma-r", "1:1"]);
    assert!(stderr(&o).contains("not nilpotent"));
    assert_eq!(bdcluster(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    for cmd in ["graph", "seed", "quiver", "omega", "verify"] {
        let args = with(&[cmd], &GL5);
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.status.code(), Some(0), "{cmd}");
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
    let a = run(&with(&["omega", "--rng", "1"], &GL5));
    let b = run(&with(&["omega", "--rng", "2"], &GL5));
    // Omega is constant, so different points give the same matrix.
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seed_and_quiver_json_round_trip() {
    let seed: SeedSummary = serde_json::from_str(&stdout(&run(&with(&["seed"], &GL5)))).unwrap();
    let rebuilt = ClusterSeed::from_summary(&seed).unwrap();
    assert_eq!(rebuilt.summary(), seed);

    let q: QuiverJson = serde_json::from_str(&stdout(&run(&with(&["quiver", "--format", "json"], &GL5)))).unwrap();
    assert_eq!(Quiver::from_json(&q), Quiver::build(&rebuilt.pair).unwrap());
}

#[test]
fn mutation_sequence_and_involution() {
    let once = run(&with(&["mutate", "--at", "(2,2)", "--format", "json"], &GL5));
    let twice = run(&with(&["mutate", "--at", "(2,2),(2,2)", "--format", "json"], &GL5));
    let base = run(&with(&["quiver", "--format", "json"], &GL5));
    assert_eq!(once.status.code(), Some(0));
    assert_ne!(once.stdout, base.stdout);
    assert_eq!(twice.stdout, base.stdout);
}

#[test]
fn laurent_runs_both_directions_and_sides() {
    for (side, run_arg) in [("row", "1..3"), ("column", "1..3")] {
        for dir in ["left", "right"] {
            let o = run(&with(&["laurent", "--run", run_arg, "--dir", dir, "--side", side, "--points", "5"], &GL5));
            let text = stdout(&o);
            assert_eq!(o.status.code(), Some(0), "{side} {dir}: {text}{}", stderr(&o));
            assert_eq!(text.matches("PASS point").count(), 5);
        }
    }
    let o = run(&with(&["laurent", "--run", "1..3", "--dir", "right", "--format", "json"], &GL5));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["distinguished"], serde_json::json!([3, 1]));
    assert_eq!(v["passed"], true);
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("bdcluster-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("graph.dot");
    let o = run(&with(&["graph", "--out", path.to_str().unwrap()], &GL5));
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, stdout(&run(&with(&["graph"], &GL5))));
    std::fs::remove_dir_all(&dir).unwrap();
}
