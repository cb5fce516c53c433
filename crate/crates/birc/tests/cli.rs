//! End-to-end checks of the experiment runner binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_birc")
}

fn base_config(out: &Path) -> serde_json::Value {
    serde_json::json!({
        "law": {
            "upper": {"alpha": 0.8, "gamma": 0.0, "k_scale": 1.0, "t_min": 2.718281828459045},
            "lower": {"alpha": 1.5, "gamma": 0.0, "k_scale": 1.0, "t_min": 2.718281828459045},
            "p_upper": 0.5
        },
        "lambda": 0.7,
        "n": 200,
        "replicas": 20,
        "seed": 7,
        "engine": "branching",
        "checkpoints": [0.5, 1.0],
        "out": out.to_str().unwrap(),
        "threads": 2
    })
}

fn write_config(dir: &Path, value: &serde_json::Value) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

/// Runs a subcommand, returns (exit code, result directory printed on stdout).
fn run(subcommand: &str, config: &Path) -> (i32, PathBuf) {
    let outp = Command::new(bin())
        .args([subcommand, "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&outp.stdout);
    let dir = PathBuf::from(stdout.trim().lines().last().unwrap_or("").to_owned());
    (outp.status.code().unwrap_or(-1), dir)
}

#[test]
fn simulate_zero_replicas_writes_manifest_only() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(tmp.path());
    cfg["replicas"] = 0.into();
    let path = write_config(tmp.path(), &cfg);
    let (code, dir) = run("simulate", &path);
    assert_eq!(code, 0);
    let entries: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(entries, vec!["manifest.json"]);
}

#[test]
fn simulate_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = base_config(tmp.path());
    let path = write_config(tmp.path(), &cfg);
    let (code_a, dir_a) = run("simulate", &path);
    let (code_b, dir_b) = run("simulate", &path);
    assert_eq!((code_a, code_b), (0, 0));
    assert_ne!(dir_a, dir_b);
    let a = fs::read(dir_a.join("results.csv")).unwrap();
    let b = fs::read(dir_b.join("results.csv")).unwrap();
    assert_eq!(a, b);
    let sa = fs::read(dir_a.join("samples.bin")).unwrap();
    let sb = fs::read(dir_b.join("samples.bin")).unwrap();
    assert_eq!(sa, sb);
}

#[test]
fn scaling_slope_field_is_self_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(tmp.path());
    cfg["n_grid"] = serde_json::json!([500, 1000, 2000]);
    cfg["replicas"] = 40.into();
    let path = write_config(tmp.path(), &cfg);
    let (code, dir) = run("scaling", &path);
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.join("results.csv")).unwrap();
    let mut pairs = Vec::new();
    let mut slope_col = f64::NAN;
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let n: f64 = cols[0].parse().unwrap();
        let median: f64 = cols[1].parse().unwrap();
        slope_col = cols[3].parse().unwrap();
        pairs.push((n, median));
    }
    let fit = birc::stats::loglog_slope(&pairs).unwrap();
    assert!((fit.slope - slope_col).abs() < 1e-12);
}

#[test]
fn invalid_config_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(tmp.path());
    cfg["lambda"] = (-1.0).into();
    let path = write_config(tmp.path(), &cfg);
    let outp = Command::new(bin())
        .args(["simulate", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(outp.status.code(), Some(1));
    assert!(!outp.stderr.is_empty());
}

#[test]
fn velocity_runs_in_ballistic_regime() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(tmp.path());
    // Both tail exponents above 1: finite E[c] and E[1/c], positive speed.
    cfg["law"]["upper"]["alpha"] = 1.5.into();
    cfg["n"] = 2000.into();
    cfg["replicas"] = 50.into();
    cfg["tolerance"] = 0.2.into();
    let path = write_config(tmp.path(), &cfg);
    let (code, dir) = run("velocity", &path);
    assert_eq!(code, 0, "velocity exceeded its tolerance");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert!(report["predicted"].as_f64().unwrap() > 0.0);
}
