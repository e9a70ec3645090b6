//! End-to-end tests of the `driftlab` binary: inputs, artifacts, verdicts,
//! exit codes, and byte-level determinism of reruns.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use driftlab::numeric::parse_rational;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_driftlab"));
    cmd.env_remove("DRIFTLAB_OUT");
    cmd.current_dir(env!("CARGO_MANIFEST_DIR"));
    cmd
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {:?} failed: {}\n{}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).expect("output dir") {
        let entry = entry.expect("entry");
        out.insert(
            entry.file_name().to_string_lossy().to_string(),
            fs::read(entry.path()).expect("file"),
        );
    }
    out
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).expect("summary"))
        .expect("valid json")
}

#[test]
fn oracle_on_t1_reports_the_hand_computed_time() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    run_ok(&[
        "oracle",
        "--chain",
        &data("t1.json"),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let summary = summary(&out_dir);
    assert_eq!(summary["start_state"], "s2");
    assert_eq!(summary["m_start"], "4");
    assert_eq!(summary["staying_time_identity"], "PASS");
    let times = fs::read_to_string(out_dir.join("hitting_times.csv")).unwrap();
    assert!(times.lines().any(|l| l == "s2,2,4"));
    assert!(times.lines().any(|l| l == "s1,1,2"));
    assert!(out_dir.join("config.json").exists());
}

#[test]
fn oracle_float_chain_matches_within_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    run_ok(&[
        "oracle",
        "--chain",
        &data("t1_float.json"),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let summary = summary(&out_dir);
    let m: f64 = summary["m_start"].as_str().unwrap().parse().unwrap();
    assert!((m - 4.0).abs() < 1e-9);
    assert_eq!(summary["staying_time_identity"], "PASS");
}

#[test]
fn oracle_on_an_instance_reports_an_exact_rational() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    run_ok(&[
        "oracle",
        "--instance",
        "KP1",
        "--n",
        "8",
        "--variant",
        "greedy",
        "--mode",
        "rational",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let summary = summary(&out_dir);
    assert_eq!(summary["start_state"], "(0,0;0)");
    let m = parse_rational(summary["m_start"].as_str().unwrap()).unwrap();
    assert!(m > parse_rational("1").unwrap());
}

#[test]
fn missing_input_is_a_usage_error() {
    let out = bin().args(["oracle"]).output().expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("input source"), "stderr: {err}");
}

#[test]
fn both_inputs_is_an_error_too() {
    let out = bin()
        .args([
            "oracle",
            "--instance",
            "KP1",
            "--n",
            "8",
            "--chain",
            &data("t1.json"),
        ])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_kp1_forward_passes_the_sandwich() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let out = run_ok(&[
        "analyze",
        "--instance",
        "KP1",
        "--n",
        "8",
        "--variant",
        "feasibility",
        "--coeffs",
        "forward",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("sandwich PASS"));
    let summary = summary(&out_dir);
    assert_eq!(summary["sandwich"], "PASS");
    assert_eq!(summary["drift_lower"], "PASS");
    assert_eq!(summary["drift_upper"], "PASS");
    let lower = parse_rational(summary["lower"].as_str().unwrap()).unwrap();
    let exact = parse_rational(summary["exact"].as_str().unwrap()).unwrap();
    let upper = parse_rational(summary["upper"].as_str().unwrap()).unwrap();
    assert!(lower <= exact && exact <= upper);
    assert!(out_dir.join("coeffs_lower.csv").exists());
    assert!(out_dir.join("coeffs_upper.csv").exists());
    assert!(out_dir.join("bounds.csv").exists());
}

#[test]
fn analyze_t1_type_c_reproduces_the_tight_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    run_ok(&[
        "analyze",
        "--chain",
        &data("t1.json"),
        "--coeffs",
        "type_c",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let summary = summary(&out_dir);
    assert_eq!(summary["lower"], "4");
    assert_eq!(summary["exact"], "4");
    assert_eq!(summary["sandwich"], "PASS");
}

#[test]
fn analyze_with_an_explicit_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    run_ok(&[
        "analyze",
        "--chain",
        &data("t1.json"),
        "--coeffs",
        "path",
        "--path",
        "2,1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let summary = summary(&out_dir);
    assert_eq!(summary["sandwich"], "PASS");
    assert_eq!(summary["lower"], "4");
}

#[test]
fn analyze_path_requires_the_path_argument() {
    let out = bin()
        .args(["analyze", "--chain", &data("t1.json"), "--coeffs", "path"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--path"));
}

#[test]
fn every_coefficient_family_passes_on_kp2() {
    for family in [
        "forward",
        "reverse",
        "allpath",
        "type_c",
        "type_cl",
        "random_init",
    ] {
        let tmp = tempfile::tempdir().unwrap();
        let out_dir = tmp.path().join("run");
        run_ok(&[
            "analyze",
            "--instance",
            "KP2",
            "--n",
            "8",
            "--variant",
            "greedy",
            "--coeffs",
            family,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        let summary = summary(&out_dir);
        assert_eq!(summary["sandwich"], "PASS", "family {family}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let args = [
        "analyze",
        "--instance",
        "KP1",
        "--n",
        "6",
        "--variant",
        "greedy",
        "--coeffs",
        "forward",
        "--out",
    ];
    run_ok(&[&args[..], &[out_dir.to_str().unwrap()]].concat());
    let first = read_dir_bytes(&out_dir);
    run_ok(&[&args[..], &[out_dir.to_str().unwrap()]].concat());
    let second = read_dir_bytes(&out_dir);
    assert_eq!(first, second);
    assert!(first.len() >= 5);
}

#[test]
fn simulate_writes_the_results_row_and_repeats_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    for dir in [&dir_a, &dir_b] {
        run_ok(&[
            "simulate",
            "--instance",
            "KP1",
            "--n",
            "8",
            "--variant",
            "greedy",
            "--trials",
            "500",
            "--cap",
            "100000",
            "--seed",
            "7",
            "--out",
            dir.to_str().unwrap(),
        ]);
    }
    let a = fs::read(dir_a.join("simulation.csv")).unwrap();
    let b = fs::read(dir_b.join("simulation.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("instance,variant,n,trials,cap,mean,se,censored,seed"));
    assert!(text.contains("KP1,greedy,8,500,100000,"));
}

#[test]
fn simulate_warns_about_censoring_when_the_cap_is_tiny() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let out = run_ok(&[
        "simulate",
        "--instance",
        "KP1",
        "--n",
        "8",
        "--variant",
        "feasibility",
        "--trials",
        "20",
        "--cap",
        "1",
        "--seed",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("censored"));
}

#[test]
fn compare_matches_the_expected_directions() {
    let expect = |id: &str, n: &str, smaller: bool| {
        let tmp = tempfile::tempdir().unwrap();
        let out_dir = tmp.path().join("run");
        run_ok(&[
            "compare",
            "--instance",
            id,
            "--n",
            n,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        let text = fs::read_to_string(out_dir.join("comparison.json")).unwrap();
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        let ratio = parse_rational(json["exact_ratio"].as_str().unwrap()).unwrap();
        let one = parse_rational("1").unwrap();
        if smaller {
            assert!(ratio < one, "{id}: {ratio}");
        } else {
            assert!(ratio > one, "{id}: {ratio}");
        }
        // The bound interval brackets the exact ratio.
        let low = parse_rational(json["ratio_low"].as_str().unwrap()).unwrap();
        let high = parse_rational(json["ratio_high"].as_str().unwrap()).unwrap();
        assert!(low <= ratio && ratio <= high);
    };
    expect("KP1", "8", true);
    expect("KP2", "8", false);
}

#[test]
fn export_graph_of_t1_has_three_vertices_and_arcs() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    run_ok(&[
        "export-graph",
        "--chain",
        &data("t1.json"),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let dot = fs::read_to_string(out_dir.join("graph.dot")).unwrap();
    assert_eq!(dot.matches("label=").count(), 3);
    assert_eq!(dot.matches(" -> ").count(), 3);
}

#[test]
fn export_graph_of_a_single_level_chain_has_no_arcs() {
    let tmp = tempfile::tempdir().unwrap();
    let chain_path = tmp.path().join("flat.json");
    fs::write(
        &chain_path,
        r#"{"mode":"rational",
            "states":[{"id":"a","fitness":"1","optimal":true},
                      {"id":"b","fitness":"1","optimal":true}],
            "rows":[{"from":"a","to":"a","p":"1"},{"from":"b","to":"b","p":"1"}]}"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("run");
    run_ok(&[
        "export-graph",
        "--chain",
        chain_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let dot = fs::read_to_string(out_dir.join("graph.dot")).unwrap();
    assert_eq!(dot.matches("label=").count(), 1);
    assert_eq!(dot.matches(" -> ").count(), 0);
}

#[test]
fn env_var_overrides_the_out_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let flag_dir = tmp.path().join("flag");
    let env_dir = tmp.path().join("env");
    let out = bin()
        .env("DRIFTLAB_OUT", env_dir.to_str().unwrap())
        .args([
            "oracle",
            "--chain",
            &data("t1.json"),
            "--out",
            flag_dir.to_str().unwrap(),
        ])
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    assert!(env_dir.join("summary.json").exists());
    assert!(!flag_dir.exists());
}

#[test]
fn mode_mismatch_with_chain_file_is_rejected() {
    let out = bin()
        .args(["oracle", "--chain", &data("t1.json"), "--mode", "float"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rational"));
}

#[test]
fn invalid_chain_reports_diagnostics_and_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let chain_path = tmp.path().join("broken.json");
    fs::write(
        &chain_path,
        r#"{"mode":"rational",
            "states":[{"id":"a","fitness":"0","optimal":false},
                      {"id":"b","fitness":"1","optimal":true}],
            "rows":[{"from":"a","to":"a","p":"9/10"},
                    {"from":"b","to":"b","p":"1"}]}"#,
    )
    .unwrap();
    let out = bin()
        .args(["oracle", "--chain", chain_path.to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row not stochastic"), "stderr: {err}");
}
