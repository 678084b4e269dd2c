use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_minorant"));
    cmd.env("MINORANT_THREADS", "1");
    cmd
}

const SCENARIO: &str = r#"{
  "command": "forward",
  "function": {"synthetic": {"rho": 1.0}},
  "q_prime": 1.0,
  "window": 60.0,
  "seed": 11,
  "samples": {"violation": 2000, "fbc": 300}
}"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn reports_are_byte_identical_and_timings_separate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.json", SCENARIO);
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = bin().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert_eq!(status.code(), Some(0));
        assert!(out.join("timings.json").exists());
        assert!(out.join("tail_sum.csv").exists());
        reports.push(std::fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let report: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["scenario"]["seed"], 11);
    assert!(report.get("timings").is_none());
}

#[test]
fn small_window_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.json", &SCENARIO.replace("60.0", "3.5"));
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("window"), "{err}");
    assert!(!tmp.path().join("report.json").exists());
}

#[test]
fn missing_seed_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.json", &SCENARIO.replace(r#""seed": 11,"#, ""));
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn series_command_prints_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.json", SCENARIO);
    assert!(bin().arg("run").arg(&cfg).arg("--out").arg(tmp.path()).status().unwrap().success());
    let report = tmp.path().join("report.json");
    let out = bin().arg("series").arg(&report).arg("tail_sum").output().unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("R,tail_radius_sum"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 40);
    let first: Vec<f64> = rows[0].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 4.0);
    assert_eq!(csv, std::fs::read_to_string(tmp.path().join("tail_sum.csv")).unwrap());

    let bad = bin().arg("series").arg(&report).arg("nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("tail_sum"));
}

#[test]
fn growth_runs_without_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "g.json",
        r#"{"command": "growth", "function": {"radial": [3.0, 2.0]}, "window": 10.0,
            "samples": {"p_grid": [2.0], "angles": 8}}"#,
    );
    assert!(bin().arg("run").arg(&cfg).arg("--out").arg(tmp.path()).status().unwrap().success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    let v = report["results"]["growth_scale"]["types"][0][1].as_f64().unwrap();
    assert!((v - 3.0).abs() < 0.15, "{v}");
}
