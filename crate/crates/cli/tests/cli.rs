//! End-to-end checks of the binary: output files, determinism, exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn mecsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mecsim"))
}

fn tiny_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("tiny.json");
    fs::write(
        &path,
        r#"{
  "schema": 1,
  "servers": 2, "services": 3,
  "storage_capacity_range": [50, 200], "compute_capacity_range": [50, 150],
  "storage_price_range": [10, 40], "compute_price_range": [10, 50],
  "service_storage_range": [10, 40], "service_compute_range": [0.1, 0.5],
  "zipf_exponent": 0.6, "budget_coefficient": 0.7,
  "slot_length_s": 60.0, "slots_per_frame": 2, "frames": 2,
  "arrival_mean": 300.0, "arrival_spread": 20.0,
  "edge_delay_s": 0.01, "cloud_delay_s": 0.1, "seed": 7
}"#,
    )
    .unwrap();
    path
}

#[test]
fn run_writes_deterministic_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    for out in ["a", "b"] {
        let status = mecsim()
            .args(["run", "--config"])
            .arg(&config)
            .args(["--algo", "rmws,cpo", "--out"])
            .arg(dir.path().join(out))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = fs::read(dir.path().join("a/report.csv")).unwrap();
    let b = fs::read(dir.path().join("b/report.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "same seed must reproduce the report byte for byte");
    let head = String::from_utf8_lossy(&a);
    assert!(head.starts_with(
        "frame,slot,algorithm,total_latency_s,edge_latency_s,cloud_latency_s,cost_total,feasible,iters_placement,iters_schedule\n"
    ));
}

#[test]
fn gen_trace_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let status = mecsim()
        .args(["gen-trace", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("t"))
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(dir.path().join("t/trace.csv")).unwrap();
    assert!(text.starts_with("frame,slot,server,service,count\n"));
    // 2 frames x 2 slots x 2 servers x 3 services data rows plus the header.
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2 * 3);
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"schema\": 9}").unwrap();
    let status = mecsim()
        .args(["run", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("o"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let missing = dir.path().join("nope.json");
    let status = mecsim()
        .args(["run", "--config"])
        .arg(&missing)
        .arg("--out")
        .arg(dir.path().join("o"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = mecsim()
        .args(["sweep", "--param", "bogus", "--values", "1.0"])
        .arg("--out")
        .arg(dir.path().join("o"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn strict_flag_reports_infeasibility_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    // Storage so tight the cloudless baseline cannot host every service.
    let config = dir.path().join("tight.json");
    fs::write(
        &config,
        r#"{
  "schema": 1,
  "servers": 1, "services": 3,
  "storage_capacity_range": [12, 12], "compute_capacity_range": [50, 150],
  "storage_price_range": [10, 40], "compute_price_range": [10, 50],
  "service_storage_range": [10, 11], "service_compute_range": [0.1, 0.5],
  "zipf_exponent": 0.6, "budget_coefficient": 0.7,
  "slot_length_s": 60.0, "slots_per_frame": 1, "frames": 1,
  "arrival_mean": 100.0, "arrival_spread": 0.0,
  "edge_delay_s": 0.01, "cloud_delay_s": 0.1, "seed": 3
}"#,
    )
    .unwrap();
    let status = mecsim()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--algo", "eera", "--strict", "--out"])
        .arg(dir.path().join("o"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // Without --strict the same run exits cleanly; the rows carry the flag.
    let status = mecsim()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--algo", "eera", "--out"])
        .arg(dir.path().join("o2"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("o2/report.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("false"));
}
