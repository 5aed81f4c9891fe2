//! End-to-end checks of the command-line interface and its exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_autono")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../autono/tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

#[test]
fn run_reports_table_and_exits_zero() {
    let output = run(&[
        "run",
        "--corpus",
        data("corpus.json").to_str().unwrap(),
        "--config",
        data("config.json").to_str().unwrap(),
        "--table",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("Single-Step Tasks"));
    assert!(stdout.contains("100.0%"));
    assert!(stdout.contains("90.0%"));
    assert!(stdout.contains("80.0%"));
}

#[test]
fn run_golden_output_matches_frozen_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let output = run(&[
        "run",
        "--corpus",
        data("corpus.json").to_str().unwrap(),
        "--config",
        data("config.json").to_str().unwrap(),
        "--golden",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let produced = std::fs::read_to_string(&out).unwrap();
    let frozen = std::fs::read_to_string(data("golden_report.json")).unwrap();
    assert_eq!(produced, frozen);
}

#[test]
fn run_with_missing_corpus_exits_one() {
    let output = run(&[
        "run",
        "--corpus",
        "/nonexistent/corpus.json",
        "--config",
        data("config.json").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("error:"));
}

#[test]
fn usage_error_exits_two() {
    let output = run(&["run"]); // required arguments missing
    assert_eq!(output.status.code(), Some(2));

    let output = run(&["no-such-subcommand"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn sweep_emits_csv() {
    let output = run(&[
        "sweep", "--p0", "0.5", "--p0", "0.25", "--beta", "1.0", "--runs", "2000",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("p0,beta,runs,mean_checks,abandoned_within_2"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    // p0 = 0.5, beta = 1: mean checks until abandon is near 2
    let mean: f64 = rows[0].split(',').nth(3).unwrap().parse().unwrap();
    assert!((mean - 2.0).abs() < 0.2, "mean {mean}");
}

#[test]
fn mcp_probe_lists_adapted_tools_from_the_mock() {
    let output = run(&[
        "mcp",
        "probe",
        "--stdio",
        &format!("{} serve-mock", bin()),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("2 tool(s)"));
    assert!(stdout.contains("add(a: Int, b: Int)"));
    assert!(stdout.contains("echo(msg: String)"));
}

#[test]
fn mcp_probe_unreachable_exits_one() {
    let output = run(&["mcp", "probe", "--ws", "ws://127.0.0.1:1"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("connect failed"));
}
