use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ahmass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ahmass")).args(args).env_remove("AHMASS_THREADS").output().expect("spawn ahmass")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}); stderr: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn mass_hyperbolic_is_zero() {
    let out = ahmass(&["mass", "--family", "hyperbolic", "--n", "3"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["class"]["tag"], "Zero");
    assert_eq!(v["config"]["command"], "mass");
    assert!(v["version"].is_string());
}

#[test]
fn mass_sads_is_timelike() {
    let out = ahmass(&["mass", "--family", "sads", "--n", "3", "--m", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let m0 = v["result"]["mass"][0].as_f64().unwrap();
    assert!((m0 / (16.0 * PI) - 1.0).abs() < 1e-3, "{m0}");
    assert_eq!(v["result"]["class"]["tag"], "TimelikeFuture");
}

#[test]
fn mass_bad_grid_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "# ahgrid v1 n=3 K=4 A=1\n10,0,0,1,1,0,0,1,0,oops\n").unwrap();
    let out = ahmass(&["mass", "--grid", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ingestion error at line 2"), "{err}");
}

#[test]
fn mass_divergent_is_undefined() {
    let out = ahmass(&[
        "mass", "--family", "perturbation", "--amplitude", "1", "--exponent", "1.5", "--skip-decay-check",
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["result"]["status"]["kind"], "undefined");
}

#[test]
fn mass_refuses_slow_decay_without_override() {
    let out = ahmass(&["mass", "--family", "perturbation", "--amplitude", "1", "--exponent", "1.4"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&out)["result"]["status"]["kind"], "decay_precondition_failed");
}

#[test]
fn validate_verdicts() {
    let out = ahmass(&["validate", "--family", "sads", "--n", "3", "--m", "1"]);
    assert_eq!(code(&out), 0);
    let out = ahmass(&["validate", "--family", "hyperbolic"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["l1"]["integral"], 0.0);
    assert_eq!(v["result"]["decay"]["exponent"], "inf");
    let out = ahmass(&["validate", "--family", "perturbation", "--exponent", "1.4", "--n", "3"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&out)["result"]["decay"]["pass"], false);
}

#[test]
fn neck_threshold_and_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let out = ahmass(&[
        "neck", "--n", "3", "--kappa", "0.75", "--d", "0.5", "--l", "0.1", "--H", "-3.9", "--csv-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let psi = v["result"]["threshold"]["psi"].as_f64().unwrap();
    assert!((psi - 7.667_965_318).abs() < 1e-6, "{psi}");
    assert_eq!(v["result"]["mean_curvature"]["pass"], true);
    assert_eq!(v["result"]["profiles"]["pass"], true);
    for f in ["psi_table.csv", "p_profile.csv", "h_profile.csv", "glued_psi.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn neck_infinite_branches() {
    let out = ahmass(&["neck", "--kappa", "0.75", "--d", "1.0", "--l", "0.1", "--H", "-1000"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["result"]["threshold"]["psi"], "inf");
    let out = ahmass(&["neck", "--kappa", "0.75", "--d", "0.5", "--l", "0.25"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["threshold"]["psi"], "inf");
    assert!(v["result"]["threshold"]["reason"].as_str().unwrap().contains("l = 0.25"));
}

#[test]
fn neck_mean_curvature_failure() {
    let out = ahmass(&["neck", "--kappa", "0.75", "--d", "0.5", "--l", "0.1", "--H", "-12"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&out)["result"]["mean_curvature"]["pass"], false);
}

#[test]
fn hypothesis_cases() {
    let out = ahmass(&["hypothesis", "--family", "hyperbolic"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["report"]["min_theta_bar"]["value"], 0.0);

    let out = ahmass(&["hypothesis", "--family", "hyperbolic", "--synthetic-r", "-6.5"]);
    assert_eq!(code(&out), 3);
    let w = &json(&out)["result"]["report"]["min_theta_bar"];
    assert!(w["value"].as_f64().unwrap() < 0.0);
    assert!(w["r"].as_f64().is_some());

    // Model curvature R = −6 cannot support the rising ramp of ψ: there
    // θ̄ = −κn²/4 < 0 wherever ψ follows the model solution.
    let out = ahmass(&["hypothesis", "--family", "sads", "--kappa", "0.75", "--d", "0.5", "--l", "0.1"]);
    assert_eq!(code(&out), 3);
    let w = json(&out)["result"]["report"]["min_theta_bar"]["value"].as_f64().unwrap();
    assert!((w + 0.75 * 9.0 / 4.0).abs() < 1e-6, "{w}");

    let out = ahmass(&[
        "hypothesis", "--family", "sads", "--kappa", "0.75", "--d", "0.5", "--l", "0.1", "--synthetic-r", "-6",
        "--neck-r", "-1.5", "--H", "-3.9",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

fn run_to(dir: &Path, name: &str, threads: &str) -> Vec<u8> {
    let path = dir.join(name);
    let out = ahmass(&[
        "mass", "--family", "perturbation", "--mode", "dipole", "--component", "mixed", "--exponent", "3.5",
        "--threads", threads, "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    fs::read(path).unwrap()
}

#[test]
fn output_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let one = run_to(dir.path(), "one.json", "1");
    let eight = run_to(dir.path(), "eight.json", "8");
    assert_eq!(one, eight);
}

#[test]
fn saved_config_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let first = ahmass(&["neck", "--kappa", "0.6", "--d", "0.3", "--l", "0.05", "--save-config", cfg.to_str().unwrap()]);
    assert_eq!(code(&first), 0);
    let second = ahmass(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&second), 0);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&ahmass(&["mass", "--bogus"])), 1);
    assert_eq!(code(&ahmass(&["neck", "--kappa", "1.5", "--d", "0.5", "--l", "0.1"])), 1);
    assert_eq!(code(&ahmass(&["mass", "--n", "2"])), 1);
    assert_eq!(code(&ahmass(&["--help"])), 0);
}

#[test]
fn threads_env_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_ahmass"))
        .args(["neck", "--kappa", "0.75", "--d", "0.5", "--l", "0.1"])
        .env("AHMASS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}
