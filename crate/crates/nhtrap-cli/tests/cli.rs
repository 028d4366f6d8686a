use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nhtrap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhtrap")).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_key_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "model.x_abs = 2\nmodel.colour = red\n").unwrap();
    let out = nhtrap(&["verify-symbols", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model.colour") && err.contains("line 2"), "{err}");
}

#[test]
fn verify_symbols_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = nhtrap(&["verify-symbols", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("symbols.json"));
    assert_eq!(v["status"], "passed");
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-10);
    let csv = fs::read_to_string(dir.path().join("trapped.csv")).unwrap();
    assert!(csv.starts_with("x,xi,forward,backward,trapped\n"));
    assert!(fs::read_to_string(dir.path().join("residual.csv")).unwrap().starts_with("x,xi,residual\n"));
}

#[test]
fn single_point_report_refuses_fitting() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let scaling = nhtrap(&["scaling", "--h-list", "0.1", "--out", d]);
    assert!(!scaling.status.success());
    let records = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 2);

    let report = nhtrap(&["report", "--h-list", "0.1", "--out", d]);
    assert!(report.status.success(), "{}", String::from_utf8_lossy(&report.stderr));
    let v = json(&dir.path().join("report.json"));
    assert_eq!(v["records"].as_array().unwrap().len(), 1);
    assert_eq!(v["records"][0]["h"], 0.1);
    assert!(v["fits"].as_object().unwrap().is_empty());
    assert!(v["fit_error"].as_str().unwrap().contains("at least 4"));
    assert!(v["warnings"].as_array().unwrap().iter().all(|w| !w.as_str().unwrap().contains("different config")));
    assert!(dir.path().join("plots/norm_iso.svg").exists());

    let strict = nhtrap(&["report", "--h-list", "0.1", "--strict", "--out", d]);
    assert!(!strict.status.success());
    assert!(String::from_utf8_lossy(&strict.stderr).contains("at least 4"));
}

#[test]
fn stage_errors_leave_a_failed_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, "grid.n_cap = 256\n").unwrap();
    let out = nhtrap(&["norms", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let v = json(&dir.path().join("norms.json"));
    assert_eq!(v["status"], "failed");
    assert!(v["error"].as_str().unwrap().contains("256"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAILED norms"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(nhtrap(&["verify-bsymbols", "--out", d]).status.success());
    let first = fs::read(dir.path().join("bsymbols.json")).unwrap();
    assert!(nhtrap(&["verify-bsymbols", "--out", d]).status.success());
    assert_eq!(first, fs::read(dir.path().join("bsymbols.json")).unwrap());
}

#[test]
fn config_command_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = nhtrap(&["config", "--seed", "7", "--h-list", "0.1,0.05"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("run.seed = 7\n") && text.contains("sweep.h = 0.1, 0.05\n"));
    let cfg = dir.path().join("echo.cfg");
    fs::write(&cfg, &text).unwrap();
    let again = nhtrap(&["config", "--config", cfg.to_str().unwrap()]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}
