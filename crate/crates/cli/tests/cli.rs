//! End-to-end runs of the `minispec` binary against the corpus directory.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(rel)
}

fn minispec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minispec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verifying_the_corrected_module_succeeds() {
    let (file, domains) = (corpus("cbit.mc"), corpus("domains.json"));
    let o = minispec(&[
        "verify",
        path(&file),
        "--domains",
        path(&domains),
        "--function",
        "cbit_set_work_cond",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    let row = text
        .lines()
        .find(|l| l.contains("cbit_set_work_cond"))
        .expect("setter row");
    assert!(row.split_whitespace().any(|c| c == "6"), "{row}");
}

#[test]
fn failed_obligation_exits_one_and_round_trips_through_report() {
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("report.json");
    let (file, domains) = (corpus("cbit_uncorrected.mc"), corpus("domains.json"));
    let o = minispec(&[
        "verify",
        path(&file),
        "--domains",
        path(&domains),
        "--function",
        "cbit_check_temperature",
        "--out",
        saved.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    let cex = text
        .lines()
        .find(|l| l.trim_start().starts_with("counterexample:"))
        .expect("counterexample line");
    assert!(
        cex.contains("gWorkCond = ") && !cex.contains("gWorkCond = 0,"),
        "{cex}"
    );
    let r = minispec(&["report", saved.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(stdout(&r), stdout(&o));

    let j = minispec(&["report", saved.to_str().unwrap(), "--format", "json"]);
    let written = std::fs::read_to_string(&saved).unwrap();
    assert_eq!(stdout(&j).trim_end(), written.trim_end());
}

#[test]
fn check_counts_functions() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.mc");
    std::fs::write(&empty, "").unwrap();
    let o = minispec(&["check", empty.to_str().unwrap(), path(&corpus("cbit.mc"))]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("empty.mc: 0 functions"), "{text}");
    assert!(text.contains("cbit.mc: 4 functions"), "{text}");
}

#[test]
fn check_reports_parse_errors_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mc");
    std::fs::write(&bad, "void f( {").unwrap();
    let o = minispec(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn table_prints_csv_and_snippet() {
    let o = minispec(&["table"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("temperature,code\n-40,1234\n"), "{text}");
    assert_eq!(text.lines().count(), 101);

    let s = minispec(&[
        "table",
        "--t-min",
        "0",
        "--t-max",
        "9",
        "--entries",
        "10",
        "--snippet",
    ]);
    assert!(stdout(&s).contains("NTC_CODE[10]"));
}

#[test]
fn scenario_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.json");
    let o = minispec(&[
        "scenario",
        path(&corpus("cbit.mc")),
        "--domains",
        path(&corpus("domains.json")),
        "--scenario",
        path(&corpus("scenarios/four_discrepancies.json")),
        "--scenario",
        path(&corpus("scenarios/discrepancy_then_ok.json")),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("(passed)").count(), 2);
    let results: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(results.as_array().unwrap().len(), 2);
}

#[test]
fn usage_and_io_errors_exit_two() {
    assert_eq!(minispec(&["verify"]).status.code(), Some(2));
    assert_eq!(minispec(&["frobnicate"]).status.code(), Some(2));
    let o = minispec(&["check", "/nonexistent/file.mc"]);
    assert_eq!(o.status.code(), Some(2));
    let bad_domains = minispec(&[
        "verify",
        path(&corpus("cbit.mc")),
        "--domains",
        path(&corpus("cbit.mc")),
    ]);
    assert_eq!(bad_domains.status.code(), Some(2));
}
