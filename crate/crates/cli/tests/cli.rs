use std::fs;
use std::process::{Command, Output};

fn encap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_encap")).args(args).env("ENCAP_THREADS", "1").output().expect("spawn encap")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_accepts_reference_preset() {
    let o = encap(&["validate", "preset:reference"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).trim_end().ends_with("feasible"));
}

#[test]
fn validate_rejects_oversized_step() {
    let o = encap(&["validate", "preset:reference", "--set", "robots.max_step=5.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let base = encap_preset_text();
    let path = dir.path().join("bad.toml");
    fs::write(&path, base.replace("[sim]\n", "[sim]\nwarp_speed = 3\n")).unwrap();
    let o = encap(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("warp_speed"), "{}", stderr(&o));
}

fn encap_preset_text() -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/presets/reference.toml");
    fs::read_to_string(path).unwrap()
}

#[test]
fn run_writes_versioned_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("out.jsonl");
    let o = encap(&["run", "preset:reference", "--seed", "3", "--tmax", "40", "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["seed"], 3);
    let text = fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len() as u64, summary["steps"].as_u64().unwrap());
    for (t, line) in lines.iter().enumerate() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(rec["schema"], 1);
        assert_eq!(rec["t"], t as u64);
        assert_eq!(rec["robots"].as_array().unwrap().len(), 10);
    }
}

#[test]
fn run_is_reproducible() {
    let a = encap(&["run", "preset:reference", "--seed", "7", "--tmax", "60"]);
    let b = encap(&["run", "preset:reference", "--seed", "7", "--tmax", "60"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn strict_mode_refuses_infeasible_run() {
    let args = ["run", "preset:reference", "--tmax", "5", "--set", "robots.max_step=1.2", "--set", "signals.robot.influence=3.5"];
    let strict: Vec<&str> = std::iter::once("--strict").chain(args).collect();
    let o = encap(&strict);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let lax = encap(&args);
    assert!(lax.status.success(), "{}", stderr(&lax));
    assert!(stderr(&lax).contains("warning: infeasible configuration: robot-step"));
}

#[test]
fn batch_reports_aggregate() {
    let o = encap(&["batch", "preset:reference", "--seeds", "0..3", "--tmax", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stats: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(stats["runs"], 3);
    assert_eq!(stats["seed_lo"], 0);
    assert_eq!(stats["seed_hi"], 2);
}

#[test]
fn bounds_json_has_step_bound() {
    let o = encap(&["bounds", "preset:reference", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let step = doc["bounds"]["robot_step_bound"].as_f64().unwrap();
    assert!((step - 0.8787817).abs() < 1e-6, "{step}");
    assert_eq!(doc["feasibility"]["pass"], true);
}

#[test]
fn bounds_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig9.csv");
    let o = encap(&["sweep", "preset:fig9", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7 * 20);
}

#[test]
fn baseline_comparison_requires_static_target() {
    let o = encap(&["compare-baseline", "preset:reference", "--seeds", "0..1", "--tmax", "10"]);
    assert!(!o.status.success());
    assert!(encap(&["compare-baseline", "preset:static", "--seeds", "0..2", "--tmax", "30"]).status.success());
}
