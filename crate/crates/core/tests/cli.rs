use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qhgeom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhgeom"))
        .args(args)
        .env("QHGEOM_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write_disk(dir: &Path, h: f64) -> String {
    let path = dir.join("disk.json");
    let out = qhgeom(&["gen", "disk", "--h", &h.to_string(), "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_validate_and_measure() {
    let dir = tempfile::tempdir().unwrap();
    let disk = write_disk(dir.path(), 0.1);

    let out = qhgeom(&["validate", "--in", &disk]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["violations"].as_array().unwrap().is_empty());

    let out = qhgeom(&["mesh", "--in", &disk]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["edges"].as_u64().unwrap() > 0);

    let out = qhgeom(&["qh", "--in", &disk, "--x", "0,0", "--y", "0.1,0", "--mode", "trapezoid"]);
    assert_eq!(out.status.code(), Some(0));
    let k = json(&out)["k"].as_f64().unwrap();
    assert!((k - (1.0f64 / 0.9).ln()).abs() < 0.01, "k = {k}");

    let out = qhgeom(&["constants", "--in", &disk, "--samples", "500"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["c_uniform"].as_f64().unwrap() >= 1.0);
}

#[test]
fn halfline_from_a_json_spec() {
    let dir = tempfile::tempdir().unwrap();
    let line = dir.path().join("halfline.json");
    let spec = r#"{"kind": "halfline", "ratio": 1.01, "span": [-400, 400]}"#;
    let out = qhgeom(&["gen", "--spec", spec, "--out", line.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = qhgeom(&["qh", "--in", line.to_str().unwrap(), "--x", "1", "--y", "2", "--mode", "upper"]);
    assert_eq!(out.status.code(), Some(0));
    let k = json(&out)["k"].as_f64().unwrap();
    assert!(k >= 2f64.ln() && k <= 1.05 * 2f64.ln(), "k = {k}");
    let out = qhgeom(&["gen", "halfline", "--ratio", "1.01", "--span=-400,400"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn transforms_and_scans() {
    let dir = tempfile::tempdir().unwrap();
    let disk = write_disk(dir.path(), 0.2);

    let out = qhgeom(&["transform", "--in", &disk, "--kind", "sphericalize", "--p", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["sandwich"]["violations"].as_u64(), Some(0));
    assert_eq!(v["transform"], "sphericalize");
    assert!(v["sandwich_worst"]["ratio"].as_f64().unwrap() >= 0.25);

    let out = qhgeom(&["scan", "--in", &disk, "--to", "snowflake:0.5", "--samples", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let env = &json(&out)["envelope"];
    assert_eq!(env["alpha"].as_f64(), Some(0.5));

    let out = qhgeom(&["scan", "--in", &disk, "--to", "scale:7", "--kind", "qs", "--samples", "500", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("x,a,b,ratio_in,ratio_out\n"));
    assert_eq!(text.lines().count(), 501);

    let out = qhgeom(&["cr", "--in", &disk, "--q", "0,1,2,3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["cross_ratio"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.json");
    let out = qhgeom(&["validate", "--in", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = qhgeom(&["gen", "disk"]);
    assert_eq!(out.status.code(), Some(2));

    let out = qhgeom(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    // a matrix violating the triangle inequality is a failed check
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"ambient": {"kind": "matrix", "matrix": [[0,1,3],[1,0,1],[3,1,0]]}, "interior": [0, 1], "boundary": [2]}"#,
    )
    .unwrap();
    let out = qhgeom(&["validate", "--in", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let v = &json(&out)["violations"][0];
    assert_eq!(v["axiom"], "triangle");

    // a domain whose interior cannot be meshed is a computation error
    let split = dir.path().join("split.json");
    std::fs::write(
        &split,
        r#"{"ambient": {"kind": "euclidean"}, "points": [[0.0], [0.1], [10.0], [10.1], [5.0]], "interior": [0, 1, 2, 3], "boundary": [4]}"#,
    )
    .unwrap();
    let out = qhgeom(&["mesh", "--in", split.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mesh too coarse"));
}

#[test]
fn suite_config_errors_stop_before_any_check() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
            "domains": [{"name": "x", "file": "missing.json"}],
            "uniform_domain": "x",
            "arc": {"n": 100, "u": [0.4]},
            "snowflake": {"epsilon": 0.5, "levels": [0.1, 0.05]},
            "correspondences": {"levels": [0.1, 0.05], "arc_u": 0.4, "arc_n": [200, 400]}
        }"#,
    )
    .unwrap();
    let out = qhgeom(&["suite", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
}
