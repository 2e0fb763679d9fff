use std::path::Path;
use std::process::{Command, Output};

fn certinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_certinv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn run_writes_both_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = certinv(&["run", "--scenario", "sir", "--seed", "3", "--out", path_arg(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("service level"));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,stock,order,demand,cost,"));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["certified"], 1);
}

#[test]
fn run_json_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = certinv(&["run", "--json", "--out", path_arg(dir.path())]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc["service_level"].as_f64().unwrap() >= 0.95);
}

#[test]
fn overrides_are_applied() {
    let dir = tempfile::tempdir().unwrap();
    let out = certinv(&[
        "run",
        "--json",
        "--out",
        path_arg(dir.path()),
        "--steps",
        "120",
        "--cost-horizon",
        "5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["steps"], 120);
    assert_eq!(doc["intervals"], 116);
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    std::fs::write(&file, "scenario = \"feedback\"\nsteps = 250\n").unwrap();
    let out = certinv(&["run", "--json", "--config", path_arg(&file), "--out", path_arg(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["steps"], 250);
}

#[test]
fn unknown_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let out = certinv(&["run", "--out", path_arg(dir.path()), "--bogus-key", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus_key"), "{}", stderr(&out));
}

#[test]
fn invalid_value_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = certinv(&["run", "--out", path_arg(dir.path()), "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_scenario_is_rejected() {
    let out = certinv(&["run", "--scenario", "lunar"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lunar"));
}

#[test]
fn elec2_needs_an_existing_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let out = certinv(&["run", "--scenario", "elec2", "--data", path_arg(&missing), "--out", path_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("absent.csv"), "{}", stderr(&out));

    let out = certinv(&["run", "--scenario", "elec2", "--out", path_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--data"), "{}", stderr(&out));
}

#[test]
fn certify_passes_for_synthetic_scenarios() {
    for scenario in ["periodic", "sir"] {
        let out = certinv(&["certify", "--scenario", scenario, "--seeds", "20", "--json"]);
        assert!(out.status.success(), "{scenario}: {}", stdout(&out));
        let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(doc["certified"], true);
        assert!(doc["min_service_level"].as_f64().unwrap() >= 0.95);
        assert!(doc["min_coverage"].as_f64().unwrap() >= 0.95);
    }
}

#[test]
fn certify_flags_uncertified_policy() {
    let out = certinv(&["certify", "--scenario", "adversarial", "--seeds", "3", "--policy", "uncertified"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("VIOLATION"));
}

#[test]
fn scenarios_are_listed() {
    let out = certinv(&["scenarios"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["periodic", "sir", "feedback", "adversarial"] {
        assert!(text.contains(name), "{name} missing");
    }
    assert!(text.contains("elec2 [requires --data]"));

    let out = certinv(&["scenarios", "--json"]);
    let list: Vec<serde_json::Value> = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(list.len(), 5);
    assert!(list.iter().any(|s| s["name"] == "elec2" && s["requires_data"] == true));
}

#[test]
fn repeated_runs_write_identical_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = certinv(&["run", "--scenario", "feedback", "--seed", "9", "--out", path_arg(out)]);
        assert!(o.status.success());
    }
    assert_eq!(
        std::fs::read(a.join("trajectory.csv")).unwrap(),
        std::fs::read(b.join("trajectory.csv")).unwrap()
    );
}
