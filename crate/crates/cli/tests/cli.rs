//! Command-surface tests driving the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

fn halfeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfeq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const TINY_RUN: &str = r#"
mesh_kind = "square"
mesh_n = 3
dt = 0.02
t_end = 0.2
nu = 0.05
t_star = 0.1
force = "benchmark"
"#;

#[test]
fn dry_run_validates_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, TINY_RUN);
    let out = halfeq(&["run", "--config", cfg.to_str().unwrap(), "--dry-run"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("configuration valid"));
    // nothing written next to the config
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn invalid_dt_is_reported_by_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, &TINY_RUN.replace("dt = 0.02", "dt = -1.0"));
    let out = halfeq(&["run", "--config", cfg.to_str().unwrap(), "--dry-run"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`dt`"), "stderr: {err}");
}

#[test]
fn run_then_check_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, TINY_RUN);
    let out_dir = dir.path().join("out");
    let out = halfeq(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("stats.csv").exists());
    assert!(out_dir.join("final_state.txt").exists());

    let out = halfeq(&["check", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["energy_identity", "k_identity", "k_positivity", "stability_ledger"] {
        assert!(stdout.contains(&format!("PASS {name}")), "missing {name} in {stdout}");
    }
    assert!(out_dir.join("check_summary.json").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("check_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["pass"], serde_json::json!(true));
}

#[test]
fn check_detects_tampered_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, TINY_RUN);
    let out_dir = dir.path().join("out");
    assert!(halfeq(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out_dir.to_str().unwrap()
    ])
    .status
    .success());

    let stats = out_dir.join("stats.csv");
    let text = std::fs::read_to_string(&stats).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let row = lines.len() - 2;
    let mut cols: Vec<String> = lines[row].split(',').map(String::from).collect();
    cols[2] = "9.9e9".into();
    lines[row] = cols.join(",");
    std::fs::write(&stats, lines.join("\n")).unwrap();

    let out = halfeq(&["check", out_dir.to_str().unwrap()]);
    assert!(!out.status.success(), "tampered run must fail the check");
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn check_missing_artifacts_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = halfeq(&["check", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing artifact"));
}

#[test]
fn paper_scale_study_requires_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let study = dir.path().join("study.toml");
    // a paper-scale study config must be refused without --paper-scale
    let text = format!(
        "kind = \"time\"\nscale = \"paper\"\nwindow_t0 = 1.0\nwindow_t1 = 1.3\ndt_list = [8e-3]\ndt_ref = 1e-3\n[base]\n{TINY_RUN}"
    );
    write(&study, &text);
    let out = halfeq(&["rates", "--time", "--config", study.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--paper-scale"));
}

#[test]
fn rates_requires_exactly_one_direction() {
    let out = halfeq(&["rates"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--time or --space"));
}

#[test]
fn estimator_self_test_passes() {
    let out = halfeq(&["rates", "--synthetic-self-test"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS estimator, p = 3"));
    assert!(stdout.contains("PASS alpha-ratio estimator, p = 2"));
}

#[test]
fn ode_oracle_command_passes() {
    let out = halfeq(&["ode-oracle"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS exact_free_decay"));
    assert!(stdout.contains("PASS be_global_order"));
    assert!(stdout.contains("PASS piecewise_exponential"));
}

#[test]
fn tiny_rates_study_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let study = dir.path().join("study.toml");
    let base = r#"
mesh_kind = "circles"
mesh_lc = 0.125
dt = 0.02
t_end = 0.4
nu = 1e-3
t_star = 10.0
force = "benchmark"
"#;
    let text = format!(
        "kind = \"time\"\nwindow_t0 = 0.2\nwindow_t1 = 0.4\ndt_list = [2e-2, 1e-2]\ndt_ref = 2.5e-3\n[base]\n{base}"
    );
    write(&study, &text);
    let out_dir = dir.path().join("tables");
    let out = halfeq(&[
        "rates",
        "--time",
        "--config",
        study.to_str().unwrap(),
        "--output",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("rate_table.csv").exists());
    assert!(out_dir.join("rate_table.txt").exists());
    let table = std::fs::read_to_string(out_dir.join("rate_table.txt")).unwrap();
    assert!(table.lines().count() >= 3);
}
