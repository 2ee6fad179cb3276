use std::process::Command;

use serde_json::Value;

fn pqready(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pqready")).args(args).output().unwrap()
}

#[test]
fn generated_snapshot_scores_identically_in_both_execution_modes() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap.json");
    let snap = snap.to_str().unwrap();
    let gen = pqready(&["bench", "gen", "--seed", "4", "--out", snap]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));

    let par = pqready(&["score", "--snapshot", snap, "--mode", "katz"]);
    let seq = pqready(&["--sequential", "score", "--snapshot", snap, "--mode", "katz"]);
    assert!(par.status.success(), "{}", String::from_utf8_lossy(&par.stderr));
    assert_eq!(par.stdout, seq.stdout);

    let report: Value = serde_json::from_slice(&par.stdout).unwrap();
    let pqri = report["pqri"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&pqri));
    assert_eq!(report["backend"], "katz");
}

#[test]
fn baseline_comparison_reports_zero_delta_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap.json");
    let snap = snap.to_str().unwrap();
    assert!(pqready(&["bench", "gen", "--seed", "1", "--out", snap]).status.success());
    let out = pqready(&["score", "--snapshot", snap, "--baseline", snap]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["delta_vs_baseline"]["kind"], "change");
    assert_eq!(report["delta_vs_baseline"]["value"].as_f64(), Some(0.0));
}

#[test]
fn missing_snapshot_fails_with_message() {
    let out = pqready(&["score", "--snapshot", "/nonexistent/snap.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("snap.json"));
}
