//! The `famus` binary end to end: files, exit codes and error reports.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"{ "clients": 60, "horizon": 60, "warmup": 20 }"#;

fn famus(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_famus"))
        .args(args)
        .current_dir(dir)
        .env_remove("FAMUS_OUT")
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.json");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("stderr is JSON")
}

#[test]
fn run_writes_stream_and_summary_and_refuses_to_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), SMALL);
    let args = ["run", "--config", &cfg, "--out", "res", "--seed", "3"];

    let first = famus(&args, tmp.path());
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let csv = fs::read_to_string(tmp.path().join("res/run_famus_seed3.csv")).unwrap();
    assert!(csv.starts_with("# famus stream v1"));
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("res/run_famus_seed3.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 3);
    assert_eq!(summary["measured_slots"], 40);
    assert_eq!(stdout_json(&first)["summary"], summary);

    let again = famus(&args, tmp.path());
    assert_eq!(again.status.code(), Some(1));
    let err = stderr_json(&again);
    assert_eq!(err["exit_code"], 1);
    assert!(err["message"].as_str().unwrap().contains("run_famus_seed3"));

    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(famus(&forced, tmp.path()).status.code(), Some(0));
    // same seed, same bytes
    assert_eq!(fs::read_to_string(tmp.path().join("res/run_famus_seed3.csv")).unwrap(), csv);
}

#[test]
fn output_directory_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_famus"))
        .args(["run", "--config", &cfg, "--policy", "ea"])
        .current_dir(tmp.path())
        .env("FAMUS_OUT", "from-env")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("from-env/run_ea_seed1.json").exists());
}

#[test]
fn gamma_sweep_has_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), SMALL);
    let out = famus(
        &["sweep", "--config", &cfg, "--out", "s", "--axis", "gamma", "--values", "10,20,50,100", "--seeds", "2"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("s/sweep_gamma.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# famus sweep v1"));
    assert_eq!(
        lines.next().unwrap(),
        "axis,x,policy,runs,cost_mean,cost_se,accuracy_loss_mean,accuracy_loss_se,jfi_mean,jfi_se"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let xs: Vec<&str> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(xs, ["10", "20", "50", "100"]);
    assert!(rows.iter().all(|r| r[0] == "gamma" && r[2] == "famus" && r[3] == "2"));

    let runs: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("s/sweep_gamma_runs.json")).unwrap()).unwrap();
    assert_eq!(runs.as_array().unwrap().len(), 8);
}

#[test]
fn invalid_requests_exit_with_two_and_a_json_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = config(tmp.path(), r#"{ "servers": 3, "tasks": 5 }"#);
    let out = famus(&["validate", "--config", &bad], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["status"], "error");
    assert!(err["violations"].as_array().unwrap().iter().any(|v| v.as_str().unwrap().contains("K <= N")));

    let unknown = config(tmp.path(), r#"{ "serverz": 3 }"#);
    assert_eq!(famus(&["run", "--config", &unknown], tmp.path()).status.code(), Some(2));
    assert_eq!(famus(&["run", "--policy", "best"], tmp.path()).status.code(), Some(2));
    assert_eq!(famus(&["sweep", "--axis", "k", "--values", "1"], tmp.path()).status.code(), Some(2));
    assert_eq!(famus(&["frobnicate"], tmp.path()).status.code(), Some(2));
    // nothing was written by any of them
    assert!(!tmp.path().join("famus-out").exists());
}

#[test]
fn help_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = famus(&["--help"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["run", "sweep", "validate", "oracle-check"] {
        assert!(text.contains(sub), "{text}");
    }
}

#[test]
fn validate_reports_derived_values_and_the_menu() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), SMALL);
    let out = famus(&["validate", "--config", &cfg, "--menu"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["epsilon"], 0.8);
    assert!((r["sigma0"].as_f64().unwrap() - (-0.1f64).exp()).abs() < 1e-15);
    assert_eq!(r["menu"]["participating_items"], 1);
    assert_eq!(r["menu"]["structural"], "pass");
    let top = r["menu"]["top"].as_f64().unwrap();
    assert!((r["menu"]["top_reward"].as_f64().unwrap() * top - 1.0).abs() < 1e-12);
}

#[test]
fn uniform_contract_has_a_single_level_and_truthful_clients() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        r#"{ "clients": 60, "horizon": 120, "warmup": 20, "scenario": "uniform-contract" }"#,
    );
    let out = famus(&["run", "--config", &cfg, "--out", "u"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = &stdout_json(&out)["summary"];
    assert_eq!(s["scenario"], "uniform-contract");
    assert_eq!(s["grid"].as_array().unwrap().len(), 1);
    assert_eq!(s["ic_violations"], 0);
}

#[test]
fn oracle_check_passes_and_counts_trials() {
    let tmp = tempfile::tempdir().unwrap();
    let out = famus(&["oracle-check", "--trials", "50", "--seed", "9"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["status"], "ok");
    assert_eq!(r["seed"], 9);
    let checks = r["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 4);
    assert!(checks.iter().all(|c| c["trials"] == 50 && c["failures"] == 0));
}

#[test]
fn hand_written_contracts_are_checked() {
    let tmp = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = tmp.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    };
    // optimal shape: only the top level participates, paid exactly 1/top
    let good = write(
        "good.json",
        r#"{ "grid": [1.0, 2.0, 4.0],
             "items": [ { "participate": false, "reward": 0.0 },
                        { "participate": false, "reward": 0.0 },
                        { "participate": true, "reward": 0.25 } ] }"#,
    );
    let out = famus(&["validate", "--contract", &good], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["contract"]["passed"], true);

    // paying the lowest level more than the top breaks monotonicity and IC
    let bad = write(
        "bad.json",
        r#"{ "grid": [1.0, 2.0],
             "items": [ { "participate": true, "reward": 2.0 },
                        { "participate": true, "reward": 0.5 } ] }"#,
    );
    let out = famus(&["validate", "--contract", &bad], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let r = stdout_json(&out);
    assert_eq!(r["status"], "failed");
    assert_ne!(r["contract"]["structural"], "pass");
    assert!(!r["contract"]["ic_ir"]["ic_failures"].as_array().unwrap().is_empty());

    let unsorted = write("unsorted.json", r#"{ "grid": [2.0, 1.0], "items": [] }"#);
    assert_eq!(famus(&["validate", "--contract", &unsorted], tmp.path()).status.code(), Some(2));
}
