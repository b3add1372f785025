//! End-to-end checks of the command-line binary: output shapes, file
//! formats, determinism, and flag handling not already covered by the
//! acceptance gate.

use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run_in(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eigenderiv"));
    cmd.args(args).current_dir(dir);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn run(dir: &Path, args: &[&str]) -> (i32, String, String) {
    run_in(dir, args, &[])
}

fn parse_stdout(stdout: &str) -> Value {
    serde_json::from_str(stdout).expect("stdout is one JSON document")
}

const DENSE_SPEC: &str = r#"{"field":"real","model":{"type":"dense",
    "eigenvalues":[1.0,2.0,4.0],
    "coefficients":[[0.5,1.0,-0.25],[1.0,0.0,0.75],[-0.25,0.75,1.5]]}}"#;

#[test]
fn compute_builtin_reports_closed_form_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(
        dir.path(),
        &[
            "compute", "--builtin", "paper_example_2", "--index", "1",
            "--max-terms", "4096",
        ],
    );
    assert_eq!(code, 3); // the series cannot stabilize in 4096 terms
    let v = parse_stdout(&out);
    assert_eq!(v["command"], "compute");
    assert_eq!(v["outputs"]["lambda_derivative"], 0.5);
    assert_eq!(v["outputs"]["tail"]["converged"], false);
    assert_eq!(
        v["outputs"]["delta_coefficients"][0]["value"]
            .as_f64()
            .unwrap(),
        2.0 / 3.0
    );
}

#[test]
fn compute_dense_diagonal_has_empty_delta() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("diag.json"),
        r#"{"field":"real","model":{"type":"dense","eigenvalues":[1.0,3.0],
            "coefficients":[[0.7,0.0],[0.0,-0.2]]}}"#,
    )
    .unwrap();
    let (code, out, _) = run(
        dir.path(),
        &["compute", "--model", "diag.json", "--index", "2"],
    );
    assert_eq!(code, 0);
    let v = parse_stdout(&out);
    assert_eq!(v["outputs"]["lambda_derivative"], -0.2);
    assert_eq!(v["outputs"]["delta_support"], 0);
    assert_eq!(v["outputs"]["delta_norm"], 0.0);
}

#[test]
fn compute_out_file_holds_full_support() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("full.json");
    let (code, out, _) = run(
        dir.path(),
        &[
            "compute", "--builtin", "paper_example_2", "--index", "1",
            "--max-terms", "4096", "--out", out_path.to_str().unwrap(),
        ],
    );
    assert_eq!(code, 3);
    let shown = parse_stdout(&out);
    let full: Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let support = full["delta_support"].as_u64().unwrap() as usize;
    assert_eq!(full["delta_coefficients"].as_array().unwrap().len(), support);
    assert_eq!(
        shown["outputs"]["delta_coefficients"].as_array().unwrap().len(),
        32
    );
    assert_eq!(shown["outputs"]["delta_coefficients_truncated_for_display"], true);
    assert_eq!(full["delta_coefficients_truncated_for_display"], false);
}

#[test]
fn compute_csv_out_round_trips_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.json"), DENSE_SPEC).unwrap();
    let out_path = dir.path().join("delta.csv");
    let (code, _, _) = run(
        dir.path(),
        &[
            "compute", "--model", "m.json", "--index", "1",
            "--out", out_path.to_str().unwrap(), "--format", "csv",
        ],
    );
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("j,re,im"));
    // c[1][2] = 1 / (1 - 2) = -1.
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "2");
    assert_eq!(row[1].parse::<f64>().unwrap(), -1.0);
    assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
    assert!(!csv.contains('\r'));
}

#[test]
fn outputs_are_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.json"), DENSE_SPEC).unwrap();
    let args = [
        "check", "--model", "m.json", "--index", "2", "--norm-bound", "4.0",
        "--out", "certs.json",
    ];
    let (c1, out1, _) = run(dir.path(), &args);
    let bytes1 = std::fs::read(dir.path().join("certs.json")).unwrap();
    let (c2, out2, _) = run(dir.path(), &args);
    let bytes2 = std::fs::read(dir.path().join("certs.json")).unwrap();
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(bytes1, bytes2);

    // Stdout differs only in wall time.
    let mut v1 = parse_stdout(&out1);
    let mut v2 = parse_stdout(&out2);
    v1["wall_time_ms"] = Value::Null;
    v2["wall_time_ms"] = Value::Null;
    assert_eq!(v1, v2);
}

#[test]
fn fingerprint_matches_between_equivalent_specs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.json"), DENSE_SPEC).unwrap();
    // Same content, different key order and whitespace.
    std::fs::write(
        dir.path().join("b.json"),
        r#"{"model":{"coefficients":[[0.5,1.0,-0.25],[1.0,0.0,0.75],[-0.25,0.75,1.5]],
            "eigenvalues":[1.0,2.0,4.0],"type":"dense"},"field":"real"}"#,
    )
    .unwrap();
    let (_, out_a, _) = run(dir.path(), &["compute", "--model", "a.json", "--index", "1"]);
    let (_, out_b, _) = run(dir.path(), &["compute", "--model", "b.json", "--index", "1"]);
    assert_eq!(
        parse_stdout(&out_a)["fingerprint"],
        parse_stdout(&out_b)["fingerprint"]
    );
}

#[test]
fn residual_zero_step_reports_zero_defect() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.json"), DENSE_SPEC).unwrap();
    let (code, out, _) = run(
        dir.path(),
        &["residual", "--model", "m.json", "--index", "1", "--h", "0"],
    );
    assert_eq!(code, 0);
    let v = parse_stdout(&out);
    assert_eq!(v["outputs"]["defect"], 0.0);
    assert_eq!(v["outputs"]["defect_within_roundoff"], true);
}

#[test]
fn oracle_builtin_requires_truncate() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(
        dir.path(),
        &["oracle", "--builtin", "paper_example_2", "--index", "1"],
    );
    assert_eq!(code, 1);
    assert!(err.contains("--truncate"));
}

#[test]
fn oracle_truncated_builtin_fd_lambda_near_half() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("study.csv");
    let (code, out, _) = run(
        dir.path(),
        &[
            "oracle", "--builtin", "paper_example_2", "--index", "1",
            "--truncate", "64", "--out", out_path.to_str().unwrap(),
            "--format", "csv",
        ],
    );
    assert_eq!(code, 0);
    let v = parse_stdout(&out);
    let order = v["outputs"]["fitted_order_lambda"].as_f64().unwrap();
    assert!((1.7..=2.3).contains(&order), "order {order}");
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("h,lambda_error,delta_error\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn figure_single_index_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("one.csv");
    let svg_path = dir.path().join("one.svg");
    let (code, _, _) = run(
        dir.path(),
        &[
            "figure", "--builtin", "paper_example_1", "1..1",
            "--out-csv", csv_path.to_str().unwrap(),
            "--out-svg", svg_path.to_str().unwrap(),
        ],
    );
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("i,delta_norm,ratio"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert!((row[1].parse::<f64>().unwrap() - 0.67).abs() < 0.01);
    assert!(lines.next().is_none());

    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.contains("<circle"));
    assert!(!svg.contains("<polyline"));
    assert!(svg.contains(">i</text>"));
    assert!(svg.contains("\u{2016}\u{394}_i\u{2016}"));
}

#[test]
fn figure_rejects_bad_ranges_and_dense_models() {
    let dir = tempfile::tempdir().unwrap();
    for range in ["5..2", "0..3", "oops", "3"] {
        let (code, _, _) = run(
            dir.path(),
            &["figure", "--builtin", "paper_example_1", range],
        );
        assert_eq!(code, 1, "range {range}");
    }
    std::fs::write(dir.path().join("m.json"), DENSE_SPEC).unwrap();
    let (code, _, _) = run(dir.path(), &["figure", "--model", "m.json", "1..4"]);
    assert_eq!(code, 1);
    // Unwritable output path.
    let (code, _, _) = run(
        dir.path(),
        &[
            "figure", "--builtin", "paper_example_1", "1..2",
            "--max-terms", "1024", "--out-csv", "no_such_dir/x.csv",
        ],
    );
    assert_eq!(code, 1);
}

#[test]
fn max_terms_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run_in(
        dir.path(),
        &["compute", "--builtin", "paper_example_2", "--index", "1"],
        &[("EIGENDERIV_MAX_TERMS", "2048")],
    );
    assert_eq!(code, 3);
    let v = parse_stdout(&out);
    assert_eq!(v["outputs"]["policy"]["max_terms"], 2048);
    // The flag wins over the environment.
    let (_, out2, _) = run_in(
        dir.path(),
        &[
            "compute", "--builtin", "paper_example_2", "--index", "1",
            "--max-terms", "512",
        ],
        &[("EIGENDERIV_MAX_TERMS", "2048")],
    );
    assert_eq!(parse_stdout(&out2)["outputs"]["policy"]["max_terms"], 512);
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(dir.path(), &["compute", "--index", "1"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(dir.path(), &["no-such-command"]);
    assert_eq!(code, 1);
    let (code, out, _) = run(dir.path(), &["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("compute"));
    let (code, _, _) = run(dir.path(), &[]);
    assert_eq!(code, 1);
}

#[test]
fn index_out_of_range_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.json"), DENSE_SPEC).unwrap();
    let (code, _, err) = run(
        dir.path(),
        &["compute", "--model", "m.json", "--index", "7"],
    );
    assert_eq!(code, 1);
    assert!(err.contains("index"));
}
