use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn guard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_guard")).args(args).output().expect("guard runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn shipped() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/five_vs_three.json")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_a_loadable_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let out = guard(&["generate", "--seed", "4", "--out", s(&path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), std::fs::read_to_string(shipped()).unwrap());

    let out = guard(&["generate", "--seed", "9", "--interceptors", "2", "--threats", "1"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"I2\"") && !text.contains("\"I3\""));
}

#[test]
fn run_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = guard(&[
        "run",
        "--scenario",
        s(&shipped()),
        "--horizons",
        "1.2s:1.65s:0.03s",
        "--threads",
        "2",
        "--out",
        s(&out_dir),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(matches!(code(&out), 0 | 3), "{stdout}");
    assert!(stdout.contains("reward matrix"));
    assert!(out_dir.join("report.json").is_file());
    assert!(out_dir.join("timings.json").is_file());
    let report = std::fs::read_to_string(out_dir.join("report.json")).unwrap();
    assert!(!report.contains("reward_matrix_s"), "timings must stay out of the report");
    let csvs = std::fs::read_dir(out_dir.join("trajectories")).unwrap().count();
    assert!(csvs >= 1);

    let out = guard(&["replay", "--out", s(&out_dir), "--rerun"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{stdout}");
    assert!(stdout.contains("replay exactly"));
    assert!(stdout.contains("byte for byte"));

    // a tampered trajectory is caught
    let first = std::fs::read_dir(out_dir.join("trajectories")).unwrap().next().unwrap().unwrap().path();
    let text = std::fs::read_to_string(&first).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[20].split(',').map(String::from).collect();
    fields[2] = format!("{}", fields[2].parse::<f64>().unwrap() + 1e-6);
    lines[20] = fields.join(",");
    std::fs::write(&first, lines.join("\n") + "\n").unwrap();
    let out = guard(&["replay", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 4);
}

#[test]
fn reward_matrix_then_assign() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("small.json");
    assert_eq!(code(&guard(&["generate", "--seed", "3", "--interceptors", "2", "--threats", "2", "--out", s(&scenario)])), 0);
    let out = guard(&[
        "reward-matrix",
        "--scenario",
        s(&scenario),
        "--horizons",
        "240:330:10",
        "--emphasis-ratio",
        "100",
        "--emphasis-ratio",
        "10",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("{I1,I2}"));
    let rewards = dir.path().join("rewards.json");
    assert!(rewards.is_file());

    let out = guard(&["assign", "--rewards", s(&rewards), "--out", s(dir.path())]);
    assert!(matches!(code(&out), 0 | 3));
    assert!(String::from_utf8(out.stdout).unwrap().contains("objective"));
    assert!(dir.path().join("assignment.json").is_file());
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(shipped()).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["threats"]["agents"][0]["position_ft"] = serde_json::json!([9000.0, 0.0, 0.0]);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let out = guard(&["run", "--scenario", s(&bad), "--out", s(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("threats.agents[0].position_ft"));

    let out = guard(&["run", "--scenario", s(&shipped()), "--horizons", "0.0123s", "--out", s(dir.path())]);
    assert_eq!(code(&out), 2);
    let out = guard(&["run", "--scenario", s(&shipped()), "--threads", "0", "--out", s(dir.path())]);
    assert_eq!(code(&out), 2);
    let out = guard(&["run", "--scenario", s(&shipped()), "--dt", "-1", "--out", s(dir.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn uncoverable_threats_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = guard(&["run", "--scenario", s(&shipped()), "--horizons", "10,20", "--out", s(dir.path())]);
    assert_eq!(code(&out), 3);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["summary"]["sentinel_objective"], serde_json::json!(true));
}
