//! End-to-end tests of the `daas-sim` binary: output reproducibility,
//! scenario diagnostics, and the compare/sweep file sets.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_daas-sim"))
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn small_scenario(dir: &Path, extra: &str) -> String {
    let path = dir.join("scenario.txt");
    let text = format!(
        "workload.n_requests = 60\nworkload.arrival_rate = 2.0\nseed = 11\n{extra}"
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_twice_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path(), "");
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    run_ok(&["run", "--scenario", &scenario, "--out", out_a.to_str().unwrap()]);
    run_ok(&["run", "--scenario", &scenario, "--out", out_b.to_str().unwrap()]);
    assert_eq!(read(&out_a, "trace.csv"), read(&out_b, "trace.csv"));
    assert_eq!(read(&out_a, "metrics.csv"), read(&out_b, "metrics.csv"));
    // rerunning into the same directory overwrites with identical bytes
    run_ok(&["run", "--scenario", &scenario, "--out", out_a.to_str().unwrap()]);
    assert_eq!(read(&out_a, "trace.csv"), read(&out_b, "trace.csv"));
}

#[test]
fn trace_and_metrics_have_expected_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path(), "");
    let out = tmp.path().join("out");
    run_ok(&["run", "--scenario", &scenario, "--out", out.to_str().unwrap()]);
    let trace = read(&out, "trace.csv");
    assert!(trace.starts_with("time,event_kind,request_id,host_id,priority\n"));
    let metrics = read(&out, "metrics.csv");
    assert!(metrics.starts_with(
        "run_id,policy,seed,priority_class,n_requests,mean_wait_s,p95_wait_s,violations,\
         violation_rate,reserved_util,actual_util,overload_time_frac\n"
    ));
    // 6 class rows + ALL row + header
    assert_eq!(metrics.lines().count(), 8);
    assert!(metrics.lines().last().unwrap().contains(",ALL,"));
}

#[test]
fn seed_override_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path(), "");
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    run_ok(&["run", "--scenario", &scenario, "--out", out_a.to_str().unwrap()]);
    run_ok(&[
        "run",
        "--scenario",
        &scenario,
        "--seed",
        "12",
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert_ne!(read(&out_a, "trace.csv"), read(&out_b, "trace.csv"));
}

#[test]
fn compare_writes_paired_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path(), "");
    let out = tmp.path().join("cmp");
    run_ok(&["compare", "--scenario", &scenario, "--out", out.to_str().unwrap()]);
    for name in [
        "trace_fifo.csv",
        "trace_ira.csv",
        "metrics_fifo.csv",
        "metrics_ira.csv",
        "comparison.json",
        "plot_mean_wait_by_class.csv",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let plot = read(&out, "plot_mean_wait_by_class.csv");
    assert!(plot.starts_with("priority_class,fifo_mean_wait_s,ira_mean_wait_s\n"));
    assert_eq!(plot.lines().count(), 7, "6 class points per policy");
    let report: serde_json::Value = serde_json::from_str(&read(&out, "comparison.json")).unwrap();
    assert!(report["fifo"]["aggregate"]["violation_rate"].is_number());
    assert!(report["ira"]["aggregate"]["violation_rate"].is_number());
    assert!(report["comparison"]["candidate_p123_not_worse"].is_boolean());
    // both policies consumed the identical generated workload
    assert_eq!(
        report["fifo"]["meta"]["workload_digest"],
        report["ira"]["meta"]["workload_digest"]
    );
}

#[test]
fn degenerate_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path(), "overbooking.beta = 0.5\n");
    let run_out = tmp.path().join("run");
    let sweep_out = tmp.path().join("sweep");
    run_ok(&["run", "--scenario", &scenario, "--out", run_out.to_str().unwrap()]);
    run_ok(&[
        "sweep",
        "--scenario",
        &scenario,
        "--seeds",
        "11",
        "--betas",
        "0.5",
        "--out",
        sweep_out.to_str().unwrap(),
    ]);
    assert_eq!(read(&run_out, "metrics.csv"), read(&sweep_out, "metrics.csv"));
}

#[test]
fn sweep_merge_order_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path(), "");
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    let args = |out: &Path| {
        vec![
            "sweep".to_string(),
            "--scenario".to_string(),
            scenario.clone(),
            "--seeds".to_string(),
            "1,2,3,4".to_string(),
            "--betas".to_string(),
            "0.25,1.0".to_string(),
            "--out".to_string(),
            out.to_str().unwrap().to_string(),
        ]
    };
    run_ok(&args(&out_a).iter().map(String::as_str).collect::<Vec<_>>());
    run_ok(&args(&out_b).iter().map(String::as_str).collect::<Vec<_>>());
    let merged = read(&out_a, "metrics.csv");
    assert_eq!(merged, read(&out_b, "metrics.csv"));
    // 8 runs x 7 rows + header
    assert_eq!(merged.lines().count(), 1 + 8 * 7);
}

#[test]
fn scenario_errors_are_diagnosed() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.txt");
    fs::write(&path, "overbooking.beta = 1.5\n").unwrap();
    let out = bin()
        .args(["run", "--scenario", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("overbooking.beta"), "stderr: {stderr}");
    assert!(stderr.contains("line 1"), "stderr: {stderr}");

    fs::write(&path, "no.such.key = 1\n").unwrap();
    let out = bin()
        .args(["run", "--scenario", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no.such.key"));

    let out = bin()
        .args(["run", "--scenario", "/nonexistent/scenario.txt"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
