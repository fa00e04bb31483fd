use std::fs;

use carnot_lab::cli::{execute, run, Cli, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
use clap::Parser;
use serde_json::Value;

fn args(list: &[&str]) -> Vec<String> {
    std::iter::once("carnot-lab").chain(list.iter().copied()).map(String::from).collect()
}

fn report(list: &[&str]) -> Value {
    let cli = Cli::try_parse_from(args(list)).unwrap();
    let artifact = execute(&cli).unwrap();
    serde_json::from_str(&artifact.json().unwrap()).unwrap()
}

#[test]
fn group_info_lists_structure() {
    let v = report(&["group-info", "heisenberg:1"]);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "group-info");
    assert_eq!(v["result"]["n"], 3);
    assert_eq!(v["result"]["layers"], serde_json::json!([2, 1]));
    assert_eq!(v["result"]["homogeneous_dimension"], 4);
    assert!(v["metadata"]["timestamp_unix"].is_u64());
    assert!(v["tool_version"].is_string());
}

#[test]
fn counterexample_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let code = run(args(&["counterexample", "--eps", "2^-2..2^-4", "--format", "both", "--out", out.to_str().unwrap()]));
    assert_eq!(code, EXIT_OK);
    let csv = fs::read_to_string(out.join("counterexample-rows.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "eps,R,R_predicted,R_scaled,L,a,b,ratio,converged");
    assert_eq!(lines.count(), 3);
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("counterexample.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["config"]["counterexample"]["eps"], "2^-2..2^-4");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, "seed = 5\nsamples = 3000\n\n[counterexample]\np = 0.5\nq = 1.0\neps = \"2^-2..2^-3\"\n").unwrap();
    let p = path.to_str().unwrap();
    let v = report(&["--config", p, "counterexample"]);
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 2);
    let v = report(&["--config", p, "--seed", "9", "counterexample", "--eps", "2^-2"]);
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["config"]["samples"], 3000);
    assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn exponent_violations_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[poincare]\ngroup = \"euclidean:1\"\np_list = [2.0, 2.0]\np = 3.0\nq = 2.0\nk = 1\n").unwrap();
    let code = run(args(&["--config", path.to_str().unwrap(), "poincare"]));
    assert_eq!(code, EXIT_VALIDATION);
    let code = run(args(&["poincare", "--group", "euclidean:1", "--p-list", "2,2", "--q", "0.5"]));
    assert_eq!(code, EXIT_VALIDATION);
}

#[test]
fn unknown_keys_and_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    fs::write(&path, "seeed = 3\n").unwrap();
    assert_eq!(run(args(&["--config", path.to_str().unwrap(), "group-info", "euclidean:2"])), EXIT_USAGE);
    assert_eq!(run(args(&["group-info", "euclidean:2", "--bogus"])), EXIT_USAGE);
    assert_eq!(run(args(&["counterexample", "--eps", "2^-x"])), EXIT_USAGE);
}

#[test]
fn missing_config_file_is_an_io_error() {
    assert_eq!(run(args(&["--config", "/nonexistent/exp.toml", "group-info", "euclidean:1"])), EXIT_VALIDATION);
}

#[test]
fn thread_count_does_not_change_reports() {
    let cases: [&[&str]; 4] = [
        &["--samples", "2000", "poincare", "--trials", "6"],
        &["--samples", "2000", "weights-check"],
        &["--samples", "2000", "leibniz", "--configurations", "3"],
        &["--samples", "2000", "repformula", "--points", "4"],
    ];
    for case in cases {
        let render = |threads: &str| {
            let mut list = vec!["--threads", threads];
            list.extend_from_slice(case);
            let cli = Cli::try_parse_from(args(&list)).unwrap();
            execute(&cli).unwrap().deterministic_json().unwrap()
        };
        let one = render("1");
        assert_eq!(one, render("4"), "{case:?}");
        assert_eq!(one, render("1"), "{case:?}");
        assert!(!one.contains("metadata"));
    }
}
