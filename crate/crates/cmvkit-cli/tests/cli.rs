use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cmvkit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmvkit"))
        .args(args)
        .current_dir(dir)
        .env_remove("CMVKIT_TOL")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn read(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("report on stderr")
}

const SEQ: &str = r#"{"input_dim": 1, "output_dim": 1, "tail": "zero_tail",
  "parameters": [{"rows": 1, "cols": 1, "data": [[0.5, 0.0]]},
                 {"rows": 1, "cols": 1, "data": [[0.3, 0.2]]}]}"#;

#[test]
fn build_cmv_writes_a_unitary_section() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "seq.json", SEQ);
    let out = cmvkit(&["build-cmv", "--seq", "seq.json", "--depth", "4", "--variant", "u0", "-o", "cmv.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let cmv = read(dir.path(), "cmv.json");
    assert_eq!(cmv["matrix"]["rows"], 10);
    assert_eq!(cmv["closure"], "unitary");
    let rep = report(&out);
    assert_eq!(rep["checks"][0]["name"], "unitarity_residual");
    assert!(rep["checks"][0]["residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn schur_params_of_zero_function_are_zero() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "theta.json", r#"{"coefficients": [{"rows": 1, "cols": 1, "data": [[0.0, 0.0]]}]}"#);
    let out = cmvkit(&["schur-params", "--taylor", "theta.json", "-N", "5", "-o", "p.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let params = read(dir.path(), "p.json");
    let list = params["parameters"].as_array().unwrap();
    assert_eq!(list.len(), 5);
    assert!(list.iter().all(|m| m["data"][0] == serde_json::json!([0.0, 0.0])));
}

#[test]
fn schur_params_recover_a_sequence() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "seq.json", SEQ);
    let out = cmvkit(&["schur-params", "--seq", "seq.json", "-N", "3", "-o", "p.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let params = read(dir.path(), "p.json");
    let g1 = &params["parameters"][1]["data"][0];
    assert!((g1[0].as_f64().unwrap() - 0.3).abs() < 1e-8);
    assert!((g1[1].as_f64().unwrap() - 0.2).abs() < 1e-8);
    assert!(params["parameters"][2]["data"][0][0].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn verify_passes() {
    let dir = TempDir::new().unwrap();
    let out = cmvkit(&["verify", "--seed", "7", "--cases", "50"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["pass"], true);
    assert!(rep["checks"].as_array().unwrap().len() >= 7);
}

#[test]
fn verify_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = cmvkit(&["verify", "--seed", "3", "--cases", "6"], dir.path());
    let b = cmvkit(&["verify", "--seed", "3", "--cases", "6"], dir.path());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_and_io_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cmvkit(&["build-cmv"], dir.path()).status.code(), Some(2));
    assert_eq!(cmvkit(&["no-such-command"], dir.path()).status.code(), Some(2));
    assert_eq!(cmvkit(&["build-cmv", "--seq", "missing.json"], dir.path()).status.code(), Some(2));
    write(dir.path(), "bad.json", "{not json");
    assert_eq!(cmvkit(&["dilate", "--matrix", "bad.json"], dir.path()).status.code(), Some(2));
    write(dir.path(), "short.json", r#"{"rows": 2, "cols": 2, "data": [[1.0, 0.0]]}"#);
    assert_eq!(cmvkit(&["dilate", "--matrix", "short.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn validation_failures_exit_one() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "big.json", r#"{"rows": 1, "cols": 1, "data": [[2.0, 0.0]]}"#);
    assert_eq!(cmvkit(&["dilate", "--matrix", "big.json"], dir.path()).status.code(), Some(1));
    write(
        dir.path(),
        "seq.json",
        r#"{"input_dim": 1, "output_dim": 1, "tail": "zero_tail",
            "parameters": [{"rows": 1, "cols": 1, "data": [[1.5, 0.0]]}]}"#,
    );
    assert_eq!(cmvkit(&["build-cmv", "--seq", "seq.json"], dir.path()).status.code(), Some(1));
}

#[test]
fn tolerance_from_environment() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "seq.json", SEQ);
    let run = |tol: &str| {
        Command::new(env!("CARGO_BIN_EXE_cmvkit"))
            .args(["build-cmv", "--seq", "seq.json", "-o", "cmv.json"])
            .current_dir(dir.path())
            .env("CMVKIT_TOL", tol)
            .output()
            .unwrap()
    };
    let out = run("1e-9,1e-6");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["checks"][0]["threshold"], 1e-6);
    assert_eq!(run("not-a-number").status.code(), Some(2));
    assert_eq!(run("-1").status.code(), Some(2));
}

#[test]
fn dilation_and_naimark_pipelines() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "t.json", r#"{"rows": 2, "cols": 2, "data": [[0.5, 0.0], [0.1, 0.2], [0.0, 0.0], [0.3, 0.0]]}"#);
    let out = cmvkit(&["dilate", "--matrix", "t.json", "--depth", "5", "-o", "u.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["pass"], true);

    write(
        dir.path(),
        "mu.json",
        r#"{"dim": 1, "atoms": [
            {"zeta": [1.0, 0.0], "weight": {"rows": 1, "cols": 1, "data": [[0.5, 0.0]]}},
            {"zeta": [-1.0, 0.0], "weight": {"rows": 1, "cols": 1, "data": [[0.5, 0.0]]}}]}"#,
    );
    let out = cmvkit(&["naimark", "--measure", "mu.json", "--depth", "3", "-o", "n.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read(dir.path(), "n.json")["matrix"]["rows"], 2);
}

#[test]
fn transfer_charfn_and_cyclic_model() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "seq.json", SEQ);
    let out = cmvkit(&["transfer", "--seq", "seq.json", "--lambda", "0", "--lambda", "-0.3,0.1", "-o", "v.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = read(dir.path(), "v.json");
    assert_eq!(v["values"][0]["value"]["data"][0][0], 0.5);

    write(dir.path(), "t.json", r#"{"rows": 1, "cols": 1, "data": [[0.5, 0.0]]}"#);
    let out = cmvkit(&["charfn", "--matrix", "t.json", "--lambda", "0", "-o", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let c = read(dir.path(), "c.json");
    assert!((c["values"][0]["value"]["data"][0][0].as_f64().unwrap() + 0.5).abs() < 1e-12);

    write(dir.path(), "swap.json", r#"{"rows": 2, "cols": 2, "data": [[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 0.0]]}"#);
    write(dir.path(), "e1.json", r#"{"rows": 2, "cols": 1, "data": [[1.0, 0.0], [0.0, 0.0]]}"#);
    let out = cmvkit(&["cyclic-model", "--unitary", "swap.json", "--subspace", "e1.json", "--depth", "2", "-o", "m.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(dir.path(), "m.json")["sequence"]["tail"], "terminated");

    write(dir.path(), "id.json", r#"{"rows": 2, "cols": 2, "data": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]}"#);
    let out = cmvkit(&["cyclic-model", "--unitary", "id.json", "--subspace", "e1.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn truncate_and_iterate() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "seq.json", SEQ);
    let out = cmvkit(&["truncate", "--seq", "seq.json", "--depth", "2", "--variant", "t0-tilde", "-o", "t.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read(dir.path(), "t.json")["rows"], 5);

    let out = cmvkit(&["schur-iterate", "--seq", "seq.json", "--steps", "2", "-o", "i.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let doc = read(dir.path(), "i.json");
    assert_eq!(doc["parameters"]["parameters"].as_array().unwrap().len(), 2);
    let first = doc["iterate"]["coefficients"][0]["data"][0][0].as_f64().unwrap();
    assert!(first.abs() < 1e-8);
}
