//! End-to-end CLI tests: golden JSON outputs, exit-code contract, the
//! observation shorthand, and input-error reporting.

use std::process::{Command, Output};

fn fixture_path() -> String {
    format!(
        "{}/../../fixtures/fig1.net.json",
        env!("CARGO_MANIFEST_DIR")
    )
}

fn pndiag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pndiag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn assert_golden(args: &[&str], golden: &str, expected_code: i32) {
    let out = pndiag(args);
    assert_eq!(out.status.code(), Some(expected_code), "args {args:?}");
    assert_eq!(stdout_of(&out), golden, "args {args:?}");
}

macro_rules! golden {
    ($name:literal) => {
        include_str!(concat!("golden/", $name))
    };
}

#[test]
fn golden_check() {
    let path = fixture_path();
    assert_golden(
        &["check", "--net", &path, "--format", "json"],
        golden!("check.json"),
        0,
    );
}

#[test]
fn golden_explain_multiset_prefixes() {
    let path = fixture_path();
    assert_golden(
        &[
            "explain",
            "--net",
            &path,
            "--obs",
            "A,B,D,E",
            "--multiset",
            "--prefixes",
            "--format",
            "json",
        ],
        golden!("explain_multiset_prefixes_abde.json"),
        0,
    );
}

#[test]
fn golden_explain_ordered() {
    let path = fixture_path();
    assert_golden(
        &[
            "explain",
            "--net",
            &path,
            "--obs",
            "A,B,D",
            "--ordered",
            "--format",
            "json",
        ],
        golden!("explain_ordered_abd.json"),
        0,
    );
}

#[test]
fn golden_diagnose_both_modes() {
    let path = fixture_path();
    assert_golden(
        &[
            "diagnose", "--net", &path, "--obs", "A,B,D", "--mode", "exact", "--format", "json",
        ],
        golden!("diagnose_exact_abd.json"),
        0,
    );
    assert_golden(
        &[
            "diagnose",
            "--net",
            &path,
            "--obs",
            "A,B,D,E*2",
            "--mode",
            "efficient",
            "--format",
            "json",
        ],
        golden!("diagnose_efficient_abdee.json"),
        0,
    );
}

#[test]
fn golden_compare() {
    let path = fixture_path();
    assert_golden(
        &[
            "compare", "--net", &path, "--obs", "A,B,D", "--format", "json",
        ],
        golden!("compare_abd.json"),
        0,
    );
}

#[test]
fn golden_precision_exits_nonzero_with_witnesses() {
    let path = fixture_path();
    assert_golden(
        &[
            "precision",
            "--net",
            &path,
            "--bound",
            "6",
            "--format",
            "json",
        ],
        golden!("precision_6.json"),
        1,
    );
}

#[test]
fn golden_runs() {
    let path = fixture_path();
    assert_golden(
        &["runs", "--net", &path, "--max-len", "5", "--format", "json"],
        golden!("runs_5.json"),
        0,
    );
}

#[test]
fn golden_simulate_and_project() {
    let path = fixture_path();
    assert_golden(
        &[
            "simulate",
            "--net",
            &path,
            "--seq",
            "f,A,B,D,E*3",
            "--format",
            "json",
        ],
        golden!("simulate_u.json"),
        0,
    );
    assert_golden(
        &[
            "project",
            "--net",
            &path,
            "--seq",
            "u_1,B,A,D,E",
            "--format",
            "json",
        ],
        golden!("project_v.json"),
        0,
    );
}

#[test]
fn precision_on_a_precise_net_exits_zero() {
    // f is followed by an observable nothing else produces, so the
    // efficient diagnoser never lags the exact one.
    let dir = std::env::temp_dir().join("pndiag-cli-precise");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("precise.net.json");
    std::fs::write(
        &path,
        r#"{
  "schema_version": "1",
  "places": [{"name": "p0"}, {"name": "p1"}, {"name": "p2"}],
  "transitions": [
    {"name": "f", "pre": ["p0"], "post": ["p1"], "observable": false, "fault": true},
    {"name": "X", "pre": ["p1"], "post": ["p2"], "observable": true, "fault": false},
    {"name": "Y", "pre": ["p0"], "post": ["p2"], "observable": true, "fault": false}
  ],
  "initial_marking": {"p0": 1}
}"#,
    )
    .unwrap();
    let out = pndiag(&[
        "precision",
        "--net",
        path.to_str().unwrap(),
        "--bound",
        "3",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(json["imprecise_witnesses"].as_array().unwrap().len(), 0);
    assert_eq!(json["diagnosable_within_bound"], true);
}

#[test]
fn malformed_nets_exit_two() {
    let dir = std::env::temp_dir().join("pndiag-cli-bad");
    std::fs::create_dir_all(&dir).unwrap();

    let garbage = dir.join("garbage.net.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    let out = pndiag(&["check", "--net", garbage.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let semantic = dir.join("observable-fault.net.json");
    std::fs::write(
        &semantic,
        r#"{
  "schema_version": "1",
  "places": [{"name": "p"}],
  "transitions": [
    {"name": "f", "pre": ["p"], "post": [], "observable": true, "fault": true}
  ],
  "initial_marking": {}
}"#,
    )
    .unwrap();
    let out = pndiag(&["check", "--net", semantic.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("observable-fault"), "stderr: {stderr}");

    let missing = dir.join("does-not-exist.net.json");
    let out = pndiag(&["check", "--net", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn structural_violations_exit_one_from_check() {
    let dir = std::env::temp_dir().join("pndiag-cli-cyclic");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cyclic.net.json");
    std::fs::write(
        &path,
        r#"{
  "schema_version": "1",
  "places": [{"name": "p"}],
  "transitions": [
    {"name": "u", "pre": ["p"], "post": ["p"], "observable": false, "fault": false},
    {"name": "f", "pre": ["p"], "post": [], "observable": false, "fault": true},
    {"name": "X", "pre": ["p"], "post": ["p"], "observable": true, "fault": false}
  ],
  "initial_marking": {"p": 1}
}"#,
    )
    .unwrap();
    let out = pndiag(&["check", "--net", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let json: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(json["acyclic_unobservable"], false);
    assert_eq!(json["cycle_witness"], serde_json::json!(["p", "u", "p"]));
}

#[test]
fn usage_errors_exit_two() {
    let path = fixture_path();
    let out = pndiag(&["frobnicate", "--net", &path]);
    assert_eq!(out.status.code(), Some(2));

    let out = pndiag(&[
        "diagnose", "--net", &path, "--obs", "A,Z", "--mode", "exact",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("unknown transition"));

    // Unobservable transitions cannot appear in an observation.
    let out = pndiag(&[
        "diagnose", "--net", &path, "--obs", "f,A", "--mode", "exact",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = pndiag(&[
        "explain",
        "--net",
        &path,
        "--obs",
        "A",
        "--max-unobs-segment",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repetition_shorthand_expands() {
    let path = fixture_path();
    let a = stdout_of(&pndiag(&[
        "diagnose",
        "--net",
        &path,
        "--obs",
        "A,B,D,E*4",
        "--mode",
        "exact",
        "--format",
        "json",
    ]));
    let b = stdout_of(&pndiag(&[
        "diagnose",
        "--net",
        &path,
        "--obs",
        "A,B,D,E,E,E,E",
        "--mode",
        "exact",
        "--format",
        "json",
    ]));
    assert_eq!(a, b);
}

#[test]
fn human_output_mentions_the_headline_facts() {
    let path = fixture_path();
    let out = stdout_of(&pndiag(&["compare", "--net", &path, "--obs", "A,B,D"]));
    assert!(out.contains("=== exact ==="));
    assert!(out.contains("FAULT_CERTAIN"));
    assert!(out.contains("divergence"));

    let out = stdout_of(&pndiag(&["precision", "--net", &path, "--bound", "4"]));
    assert!(out.contains("diagnosable within bound: yes"));
    assert!(out.contains("max detection delay 3"));
}

#[test]
fn parallel_precision_matches_sequential_output() {
    let path = fixture_path();
    let sequential = stdout_of(&pndiag(&[
        "precision",
        "--net",
        &path,
        "--bound",
        "5",
        "--format",
        "json",
    ]));
    let parallel = stdout_of(&pndiag(&[
        "precision",
        "--net",
        &path,
        "--bound",
        "5",
        "--jobs",
        "4",
        "--format",
        "json",
    ]));
    assert_eq!(sequential, parallel);
}
