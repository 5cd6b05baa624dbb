use std::path::Path;
use std::process::{Command, Output};

fn streamix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn noiseless_hard_run_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = streamix(&[
        "run", "--algorithm", "hard", "--k", "2", "--d", "5", "--C", "8", "--sigma", "0", "--init", "true-means",
        "--N", "100", "--out-dir", out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["final_error"].as_f64(), Some(0.0));
    assert_eq!(summary["samples_consumed"].as_u64(), Some(100));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,e2_0,e2_1,vmax,it_flag,winner\n"));
    assert_eq!(trace.lines().count(), 102);
}

#[test]
fn soft_with_three_components_is_a_config_error() {
    let o = streamix(&["run", "--algorithm", "soft", "--k", "3", "--d", "5", "--N", "1000"]);
    assert_eq!(o.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("soft requires k=2"));
}

fn trace_bytes(dir: &Path) -> Vec<u8> {
    let out = dir.to_str().unwrap();
    let o = streamix(&[
        "run", "--k", "3", "--d", "6", "--C", "8", "--N", "5000", "--N0", "2000", "--block-size", "200",
        "--retained-count", "150", "--seed", "42", "--out-dir", out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    std::fs::read(dir.join("trace.csv")).unwrap()
}

#[test]
fn seeded_traces_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ta = trace_bytes(a.path());
    assert!(!ta.is_empty());
    assert_eq!(ta, trace_bytes(b.path()));
}

#[test]
fn init_failure_exits_two() {
    // two coincident groups of points cannot be split into three components
    let o = streamix(&[
        "initcheck", "--k", "3", "--d", "4", "--C", "0.01", "--N0", "600", "--block-size", "100",
        "--retained-count", "100", "--max-init-retries", "0",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let err: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(err["error"], "init_failure");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"k": 2, "d": 4, "C": 8, "sigma": 0, "N": 50, "init": "true-means", "seed": 3}"#).unwrap();
    let o = streamix(&["run", "--config", cfg.to_str().unwrap(), "--N", "60"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stdout).trim()).unwrap();
    assert_eq!(summary["N"].as_u64(), Some(60));
    assert_eq!(summary["seed"].as_u64(), Some(3));

    std::fs::write(&cfg, r#"{"k": 2, "bogus": true}"#).unwrap();
    let o = streamix(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_needs_two_values_and_writes_csv() {
    let o = streamix(&["sweep", "--axis", "N", "--values", "1000", "--repeats", "2", "--init", "true-means"]);
    assert_eq!(o.status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let o = streamix(&[
        "sweep", "--axis", "C", "--values", "6,8", "--repeats", "2", "--init", "true-means", "--d", "4", "--N",
        "2000", "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows = streamix::harness::read_sweep_csv(csv.as_bytes()).unwrap();
    assert_eq!(rows.iter().filter(|r| r.kind == "cell").count(), 4);
    assert_eq!(rows.iter().filter(|r| r.kind == "summary").count(), 2);
}

#[test]
fn compare_noiseless_ties() {
    let o = streamix(&[
        "compare", "--k", "2", "--d", "3", "--sigma", "0", "--init", "true-means", "--N", "500", "--repeats", "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stdout).trim()).unwrap();
    assert_eq!(r["ties"].as_u64(), Some(3));
}

#[test]
fn floor_reports_reference() {
    let o = streamix(&["floor", "--k", "2", "--d", "2", "--C", "12", "--trials", "20000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stdout).trim()).unwrap();
    let per_center = r["estimate"]["per_center"].as_array().unwrap();
    assert!(per_center.iter().all(|v| v.as_f64().unwrap() <= 1e-8));
}
