//! End-to-end tests of the command line: exit codes, payload shapes and
//! byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_reebcyl")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const PANTS: &str = r#"{
  "ends": [
    {"delta": 0, "sign": "-", "p": 0, "pp": 1},
    {"delta": 0, "sign": "-", "p": 1, "pp": 1},
    {"delta": 0, "sign": "+", "p": 1, "pp": 2}
  ],
  "c_plus": 0,
  "c_minus": 0
}"#;

const CYLINDER: &str = r#"{
  "ends": [
    {"delta": 0, "sign": "+", "p": 1, "pp": 1},
    {"delta": 0, "sign": "-", "p": 1, "pp": 1}
  ],
  "c_plus": 0,
  "c_minus": 0
}"#;

const NON_PRIMITIVE: &str = r#"{
  "ends": [
    {"delta": 0, "sign": "+", "p": 2, "pp": 2},
    {"delta": 0, "sign": "-", "p": 2, "pp": 2}
  ],
  "c_plus": 0,
  "c_minus": 0
}"#;

const SUM_BROKEN: &str = r#"{
  "ends": [
    {"delta": 0, "sign": "+", "p": 0, "pp": 1},
    {"delta": 0, "sign": "-", "p": 0, "pp": -1}
  ],
  "c_plus": 0,
  "c_minus": 0
}"#;

const CHART: &str = r#"{
  "q": 0, "qp": 1,
  "sigma_lo": 1.2, "sigma_hi": 1.9,
  "eps": 0.1
}"#;

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pants = write(dir.path(), "pants.json", PANTS);
    let broken = write(dir.path(), "broken.json", SUM_BROKEN);
    let bad = write(dir.path(), "bad.json", "{nope");

    let out = run(&["validate", pants.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"pass\":true"));

    let out = run(&["validate", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"1.15\""));

    let out = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decide_exit_codes_and_witness() {
    let dir = tempfile::tempdir().unwrap();
    let pants = write(dir.path(), "pants.json", PANTS);
    let cyl = write(dir.path(), "cyl.json", CYLINDER);
    let nonprim = write(dir.path(), "np.json", NON_PRIMITIVE);

    let out = run(&["decide", pants.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"verdict\":\"nonempty\""));
    // Witness edges (0,1) and (-1,-1).
    assert!(text.contains("\"q\":0") && text.contains("\"qp\":1"));
    assert!(text.contains("\"q\":-1") && text.contains("\"qp\":-1"));

    let out = run(&["decide", cyl.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("one_angle_cylinder"));

    let out = run(&["decide", nonprim.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"1.16\""));

    let out = run(&["decide", "/nonexistent/file.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dim_payload() {
    let dir = tempfile::tempdir().unwrap();
    let pants = write(dir.path(), "pants.json", PANTS);
    let out = run(&["dim", pants.to_str().unwrap(), "--genus", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("dim emits JSON");
    assert_eq!(value["i_hat"], 3);
    assert_eq!(value["deg_n"], 1);
    assert_eq!(value["euler"], -1);

    let out = run(&["dim", pants.to_str().unwrap(), "--genus", "0", "--kc", "0"]);
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["budgets"]["theta_budget"], 1);
    assert_eq!(value["budgets"]["crit_point_bound"], 0);
}

#[test]
fn expand_then_linearize_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let pants = write(dir.path(), "pants.json", PANTS);

    let out = run(&["decide", pants.to_str().unwrap()]);
    let decided: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();

    let out = run(&["expand", pants.to_str().unwrap(), "--delta", "1e-3"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let graph_path = dir.path().join("graph.json");
    fs::write(&graph_path, &out.stdout).unwrap();

    let out = run(&[
        "linearize",
        graph_path.to_str().unwrap(),
        "--data",
        pants.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let lin: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(lin["line_graph"]["edges"], decided["witness"]["edges"]);

    // Excessive delta is a negative verdict, not a crash.
    let out = run(&["expand", pants.to_str().unwrap(), "--delta", "1.0"]);
    assert_eq!(out.status.code(), Some(1));

    // The one-angle cylinder family has no expansion.
    let cyl = write(dir.path(), "cyl.json", CYLINDER);
    let out = run(&["expand", cyl.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sample_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "chart.json", CHART);
    let chart_path = dir.path().join("sampled.json");

    let out = run(&[
        "sample",
        spec.to_str().unwrap(),
        "--res",
        "8",
        "--out",
        chart_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    let csv_path = dir.path().join("chart.csv");
    let out = run(&[
        "mesh",
        chart_path.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().count(), 65); // header + 8x8 nodes
    assert!(csv.starts_with("sigma,v,s,t,theta,phi"));

    let obj_path = dir.path().join("chart.obj");
    let out = run(&[
        "mesh",
        chart_path.to_str().unwrap(),
        chart_path.to_str().unwrap(),
        "--format",
        "obj",
        "--out",
        obj_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let obj = fs::read_to_string(&obj_path).unwrap();
    assert_eq!(obj.matches("g chart").count(), 2);

    // An unsampleable spec is a negative verdict.
    let bad_spec = write(
        dir.path(),
        "bad_chart.json",
        r#"{"q": 0, "qp": 1, "sigma_lo": 1.2, "sigma_hi": 1.9, "eps": 0.9}"#,
    );
    let out = run(&["sample", bad_spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("embedding bound"));

    // Malformed chart spec JSON is an input error.
    let junk = write(dir.path(), "junk.json", "{)");
    let out = run(&["sample", junk.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn payloads_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let pants = write(dir.path(), "pants.json", PANTS);
    for cmd in [vec!["decide"], vec!["dim"], vec!["expand"]] {
        let mut args: Vec<&str> = cmd.clone();
        args.push(pants.to_str().unwrap());
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout, "{cmd:?} output is not deterministic");
    }
}
