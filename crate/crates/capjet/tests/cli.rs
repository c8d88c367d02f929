use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn capjet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capjet")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn base_config(end_time: f64) -> Value {
    json!({
        "grid": {"half_period": std::f64::consts::PI, "points": 16},
        "physics": {"radius": 1.0, "kappa": 1.0},
        "integrator": {"dt": 0.015625, "end_time": end_time},
        "solver": {"cells": 64, "tol": 1e-12},
        "diagnostics": {"tracked_modes": [1, 2]}
    })
}

/// Parses a CSV written by the tool: `#` comments, then a header, then rows.
fn read_csv(path: &Path) -> (Vec<String>, Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let comments: Vec<String> = text.lines().filter(|l| l.starts_with('#')).map(String::from).collect();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (comments, header, rows)
}

#[test]
fn equilibrium_stays_put() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(dir.path(), "eq.json", &base_config(0.25));
    let out = capjet(&["simulate", "--config", cfg.to_str().unwrap(), "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    let (comments, header, rows) = read_csv(&run.join("trajectory.csv"));
    assert!(comments.iter().any(|c| c.starts_with("# config_sha256=")));
    assert_eq!(header, ["t", "E", "min_eta", "eta_H3", "psi_H3", "amp_1", "amp_2"]);
    assert_eq!(rows.len(), 17);
    for r in &rows {
        assert!(r[1].parse::<f64>().unwrap().abs() <= 1e-14, "energy {}", r[1]);
        assert_eq!(r[2].parse::<f64>().unwrap(), 1.0);
    }
    let outcome: Value = serde_json::from_str(&fs::read_to_string(run.join("outcome.json")).unwrap()).unwrap();
    assert_eq!(outcome["outcome"], "completed");
    assert_eq!(outcome["steps"], 16);
    assert!(run.join("snap_000016.cjsnap").exists());
}

#[test]
fn restart_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(0.5);
    cfg["initial"] = json!({"eta_modes": [{"amplitude": 0.01, "mode": 2}], "psi_modes": [{"amplitude": 0.005, "mode": 1, "phase": 0.3}]});
    let full = write_json(dir.path(), "full.json", &cfg);
    assert_eq!(capjet(&["simulate", "--config", full.to_str().unwrap(), "--out", "full"], dir.path()).status.code(), Some(0));
    cfg["initial"] = json!({"snapshot": "full/snap_000016.cjsnap"});
    let half = write_json(dir.path(), "half.json", &cfg);
    assert_eq!(capjet(&["simulate", "--config", half.to_str().unwrap(), "--out", "half"], dir.path()).status.code(), Some(0));
    for step in [16, 24, 32] {
        let name = format!("snap_{step:06}.cjsnap");
        let a = fs::read(dir.path().join("full").join(&name)).unwrap();
        let b = fs::read(dir.path().join("half").join(&name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn pinch_off_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(60.0);
    cfg["grid"] = json!({"half_period": std::f64::consts::PI / 0.7, "points": 32});
    cfg["integrator"] = json!({"end_time": 60.0, "save_every": 1000});
    cfg["solver"] = json!({});
    cfg["initial"] = json!({"eta_modes": [{"amplitude": 0.3, "mode": 1}]});
    let p = write_json(dir.path(), "pinch.json", &cfg);
    let out = capjet(&["simulate", "--config", p.to_str().unwrap(), "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let outcome: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(outcome["outcome"], "pinch_off");
    assert!(outcome["pinch_off"]["time"].as_f64().unwrap() < 60.0);
}

#[test]
fn errors_are_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(1.0);
    cfg["grid"]["points"] = json!(15);
    let p = write_json(dir.path(), "odd.json", &cfg);
    let out = capjet(&["simulate", "--config", p.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].is_string() && err["message"].is_string());

    cfg["grid"]["points"] = json!(16);
    cfg["physics"]["viscosity"] = json!(0.1);
    let p = write_json(dir.path(), "typo.json", &cfg);
    let out = capjet(&["simulate", "--config", p.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("viscosity"));

    let out = capjet(&["simulate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = capjet(&["verify", "nonsense"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dispersion_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = capjet(&["dispersion", "--radius", "2", "--xi-max", "1", "--points", "11"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let summary: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!((summary["x_star"].as_f64().unwrap() - 0.6970).abs() < 1e-3);
    assert!((summary["xi_star"].as_f64().unwrap() - 0.3485).abs() < 1e-3);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "xi,sigma2,sigma_re,sigma_im");
    // eleven samples; 1/R = 0.5 is already one of them
    assert_eq!(rows.len(), 12);
    assert!(rows.contains(&"0.5,0,0,0"));

    let out = capjet(&["dispersion", "--out", "d"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("d/dispersion.csv").exists());
}

#[test]
fn verify_writes_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = capjet(&["verify", "bessel", "--out", "v"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let (_, header, rows) = read_csv(&dir.path().join("v/verify_bessel.csv"));
    assert_eq!(header, ["suite", "check", "measured", "relation", "bound", "status"]);
    assert!(!rows.is_empty() && rows.iter().all(|r| r[5] == "pass"));
}

fn sweep_spec(axes: Value, cap: usize) -> Value {
    let mut base = base_config(28.0);
    base["integrator"] = json!({"end_time": 28.0});
    base["initial"] = json!({"eta_modes": [{"amplitude": 1e-5, "mode": 1}]});
    base["output"] = json!({"formats": ["csv"]});
    json!({"base": base, "axes": axes, "cap": cap})
}

#[test]
fn sweep_matches_linear_theory_and_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_json(dir.path(), "sweep.json", &sweep_spec(json!([{"name": "kR", "values": [0.5, 0.7, 0.8]}]), 8));
    let mut summaries = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = format!("s{threads}");
        let out = capjet(&["sweep", "--config", spec.to_str().unwrap(), "--threads", threads, "--out", &out_dir], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let report: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report, json!({"runs": 3, "failed": 0}));
        summaries.push(fs::read(dir.path().join(&out_dir).join("summary.csv")).unwrap());
    }
    assert!(summaries[0] == summaries[1]);
    let (_, header, rows) = read_csv(&dir.path().join("s1/summary.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let err: f64 = r[col("growth_rel_error")].parse().unwrap();
        assert!(err <= 0.02, "kR={} error {err}", r[col("kR")]);
    }
    assert!(dir.path().join("s1/run_0002/trajectory.csv").exists());
}

#[test]
fn sweep_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let mut empty = sweep_spec(json!([]), 8);
    empty["base"]["integrator"]["end_time"] = json!(1.0);
    let p = write_json(dir.path(), "empty.json", &empty);
    let out = capjet(&["sweep", "--config", p.to_str().unwrap(), "--out", "e"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (_, _, rows) = read_csv(&dir.path().join("e/summary.csv"));
    assert_eq!(rows.len(), 1);

    let big = sweep_spec(json!([{"name": "physics.kappa", "values": [1, 2, 3]}, {"name": "kR", "values": [0.5, 0.7]}]), 5);
    let p = write_json(dir.path(), "big.json", &big);
    let out = capjet(&["sweep", "--config", p.to_str().unwrap(), "--out", "b"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
    assert!(!dir.path().join("b").exists());
}
