use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fgscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgscan"))
        .args(args)
        .env_remove("RUST_LOG")
        .env("FGSCAN_THREADS", "2")
        .output()
        .expect("run fgscan")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn simulated(dir: &Path, n: usize, p: usize) -> PathBuf {
    let path = dir.join("sim.csv");
    let out = fgscan(&[
        "simulate",
        "--n",
        &n.to_string(),
        "--p",
        &p.to_string(),
        "--seed",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn fit_reports_exact_zeros() {
    let dir = TempDir::new().unwrap();
    let data = simulated(dir.path(), 300, 12);
    let v = json(&fgscan(&["fit", data.to_str().unwrap()]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["method"], "cycbar");
    let beta: Vec<f64> = v["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b.as_f64().unwrap())
        .collect();
    assert_eq!(beta.len(), 12);
    assert!(beta.contains(&0.0));
    let support = v["support"].as_array().unwrap();
    assert_eq!(support.len(), beta.iter().filter(|&&b| b != 0.0).count());
    assert_eq!(v["converged"], true);
    assert!(v["loglik"].as_f64().unwrap() < 0.0);
    assert!(v["bic"].is_number());
}

#[test]
fn bad_status_names_the_column() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "d.csv", "time,event,x\n1,1,0.5\n2,7,0.1\n");
    let out = fgscan(&["fit", data.to_str().unwrap(), "--status-col", "event"]);
    assert_eq!(code(&out), 5);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("'event'") && err.contains("row 3"), "{err}");
}

#[test]
fn non_finite_covariate_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "d.csv", "time,status,x\n1,1,0.5\n2,1,NaN\n");
    assert_eq!(code(&fgscan(&["fit", data.to_str().unwrap()])), 5);
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&fgscan(&["fit", missing.to_str().unwrap()])), 3);
    let garbled = write(dir.path(), "g.csv", "time,status,x\n1,1,abc\n");
    assert_eq!(code(&fgscan(&["fit", garbled.to_str().unwrap()])), 4);
    assert_eq!(code(&fgscan(&["fit", "--method", "ridge", "x.csv"])), 2);
    assert_eq!(code(&fgscan(&["frobnicate"])), 2);
}

#[test]
fn strict_turns_non_convergence_into_an_error() {
    let dir = TempDir::new().unwrap();
    let data = simulated(dir.path(), 200, 8);
    let d = data.to_str().unwrap();
    let args = ["fit", d, "--method", "bar", "--max-iter", "1", "--tol", "1e-12"];
    let v = json(&fgscan(&args));
    assert_eq!(v["converged"], false);
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(code(&fgscan(&strict)), 7);
}

#[test]
fn config_overlay_yields_to_flags() {
    let dir = TempDir::new().unwrap();
    let data = simulated(dir.path(), 200, 8);
    let cfg = write(
        dir.path(),
        "c.toml",
        "[fit]\nmethod = \"lasso\"\nlambda = \"0.05\"\nstandardize = true\n",
    );
    let d = data.to_str().unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&fgscan(&["fit", d, "--config", c]));
    assert_eq!(v["method"], "lasso");
    assert_eq!(v["lambda"], 0.05);
    assert!(v["coefficients_standardized"].is_array());
    let v = json(&fgscan(&["fit", d, "--config", c, "--method", "mcp", "--lambda", "0.1"]));
    assert_eq!(v["method"], "mcp");
    assert_eq!(v["lambda"], 0.1);
    let bad = write(dir.path(), "bad.toml", "[fit\n");
    assert_eq!(code(&fgscan(&["fit", d, "--config", bad.to_str().unwrap()])), 4);
}

#[test]
fn covariate_selection_by_position_and_range() {
    let dir = TempDir::new().unwrap();
    let data = simulated(dir.path(), 150, 6);
    let v = json(&fgscan(&[
        "fit",
        data.to_str().unwrap(),
        "--covariates",
        "3-4,z6",
        "--lambda",
        "1.5",
    ]));
    assert_eq!(v["covariates"], serde_json::json!(["z1", "z2", "z6"]));
}

#[test]
fn tune_writes_the_path() {
    let dir = TempDir::new().unwrap();
    let data = simulated(dir.path(), 200, 8);
    let path = dir.path().join("path.csv");
    let v = json(&fgscan(&[
        "tune",
        data.to_str().unwrap(),
        "--path-csv",
        path.to_str().unwrap(),
    ]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["grid"].as_array().unwrap().len(), 25);
    let best = v["best_index"].as_u64().unwrap() as usize;
    assert_eq!(v["best_lambda"], v["grid"][best]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("lambda,bic,support_size,converged"));
    assert_eq!(text.lines().count(), 26);

    let grid = write(dir.path(), "grid.txt", "0.5, 1.0\n2.0\n");
    let v = json(&fgscan(&[
        "tune",
        data.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "--no-warm-start",
    ]));
    assert_eq!(v["grid"], serde_json::json!([0.5, 1.0, 2.0]));
    assert_eq!(v["warm_start"], false);
}

#[test]
fn censoring_estimate_dump() {
    let dir = TempDir::new().unwrap();
    let data = write(
        dir.path(),
        "d.csv",
        "time,status,x\n1,1,0.1\n2,0,0.4\n3,2,-0.3\n4,0,0.2\n5,1,1.0\n",
    );
    let km = dir.path().join("km.csv");
    json(&fgscan(&[
        "fit",
        data.to_str().unwrap(),
        "--lambda",
        "0",
        "--dump-censoring-km",
        km.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(km).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows, ["time,survival", "2,0.75", "4,0.375"]);
}

#[test]
fn check_passes_on_simulated_data() {
    let dir = TempDir::new().unwrap();
    let data = simulated(dir.path(), 400, 5);
    let v = json(&fgscan(&["check", data.to_str().unwrap(), "--max-rows", "300"]));
    assert_eq!(v["passed"], true);
    assert_eq!(v["n_rows"], 400);
    assert_eq!(v["n_checked"], 300);
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
    assert!(v["max_discrepancy"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn check_on_all_censored_data_is_trivial() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "d.csv", "time,status,x\n1,0,0.1\n2,0,0.4\n3,0,-0.3\n");
    let out = fgscan(&["check", data.to_str().unwrap()]);
    let v = json(&out);
    assert_eq!(v["trivial"], true);
    assert_eq!(v["passed"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("trivially"));
}

#[test]
fn simulate_is_deterministic() {
    let run = |seed: &str, rep: &str| {
        let out = fgscan(&["simulate", "--n", "50", "--p", "4", "--seed", seed, "--replicate", rep]);
        assert!(out.status.success());
        out.stdout
    };
    let a = run("9", "2");
    assert_eq!(a, run("9", "2"));
    assert_ne!(a, run("9", "3"));
    assert_ne!(a, run("10", "2"));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next(), Some("time,status,z1,z2,z3,z4"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn help_lists_exit_codes() {
    let out = fgscan(&["fit", "--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Exit codes:") && text.contains("FGSCAN_THREADS"));
}
