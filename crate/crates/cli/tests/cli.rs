use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypokinetic"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap()
}

const SMALL: [&str; 6] = ["--nx", "16", "--nv", "128", "--s", "0.4"];

#[test]
fn check_passes_and_writes_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["check", "--samples", "10", "--alpha", "0"];
    args.extend(SMALL);
    let out = run(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let ledger: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("invariants.json")).unwrap()).unwrap();
    assert_eq!(ledger["passed"], true);
}

#[test]
fn injected_wall_fault_fails_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["check", "--samples", "10", "--alpha", "0.5", "--cm-factor", "1.01"];
    args.extend(["--nx", "16", "--nv", "128"]);
    let out = run(&args, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL") && l.contains("zero_flux")), "{stdout}");
}

#[test]
fn simulate_writes_series_grid_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "--eps", "0.5", "--T", "1", "--alpha", "0", "--seed", "7"];
    args.extend(SMALL);
    let out = run(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let series = std::fs::read_to_string(dir.path().join("series_eps0.5_seed7.csv")).unwrap();
    assert!(series.starts_with("t,H_norm,triple_norm,micro_norm,mass,boundary_diss"));
    assert_eq!(series.lines().count(), 1 + 11);
    let grid = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 128);
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["grid"]["nx"], 16);
    assert_eq!(meta["config"]["s"], 0.4);
}

#[test]
fn invalid_parameters_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--s", "0.4", "--alpha", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s > 1/2"));
}
