use std::path::Path;
use std::process::Command;

use ibwave_lab::config::{DataCase, ExperimentConfig, StudyKind};

fn ibwave(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ibwave"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn small_config(dir: &Path, cases: Vec<DataCase>) -> String {
    let mut cfg = ExperimentConfig::benchmark(StudyKind::Decouple);
    cfg.grid.half_length = 32.0;
    cfg.grid.n_points = 256;
    cfg.sweep.deltas = vec![0.2, 0.4];
    cfg.study.cases = cases;
    cfg.time.t_end = 1.0;
    cfg.time.snapshot_interval = 0.25;
    let path = dir.join("study.toml");
    std::fs::write(&path, cfg.serialize()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn decouple_then_report_reproduces_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), vec![DataCase::General]);
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy();
    // a two-point ladder evaluates no criterion, so the run passes
    let (code, stdout) = ibwave(&[
        "decouple",
        "--config",
        &cfg,
        "--out",
        &out_s,
        "--workers",
        "2",
    ]);
    assert_eq!(code, 0, "{stdout}");
    let first = std::fs::read(out.join("records.csv")).unwrap();
    let (code, _) = ibwave(&["report", "--out", &out_s]);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read(out.join("records.csv")).unwrap(), first);
    for f in [
        "summary.json",
        "error_vs_t.csv",
        "error_vs_delta.csv",
        "residual_vs_delta.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn failing_criterion_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::benchmark(StudyKind::Decouple);
    cfg.grid.half_length = 32.0;
    cfg.grid.n_points = 256;
    cfg.study.families = vec![ibwave_core::solvers::ModelKind::Ch];
    cfg.study.cases = vec![DataCase::General, DataCase::Unidirectional];
    cfg.sweep.deltas = vec![0.1, 0.2, 0.4];
    cfg.time.t_end = 1.0;
    cfg.time.snapshot_interval = 0.25;
    let path = dir.path().join("uni.toml");
    std::fs::write(&path, cfg.serialize()).unwrap();
    let out = dir.path().join("out");
    let (code, stdout) = ibwave(&[
        "decouple",
        "--config",
        &path.to_string_lossy(),
        "--out",
        &out.to_string_lossy(),
    ]);
    assert!(stdout.contains("AC-4 FAIL"), "{stdout}");
    assert_eq!(code, 1);
}

#[test]
fn solve_exports_snapshots_for_the_energy_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), vec![DataCase::General]);
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy();
    assert_eq!(ibwave(&["solve", "--config", &cfg, "--out", &out_s]).0, 0);
    assert!(out.join("snapshots/run000_ib.bin").exists());
    assert!(out.join("snapshots/run005_wm.json").exists());
    let (code, stdout) = ibwave(&["energy", "--out", &out_s]);
    assert_eq!(code, 0, "{stdout}");
    assert_eq!(stdout.lines().count(), 6);
    let rows: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("energy.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 6 * 5);
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "study.kind = \"decouple\"\n").unwrap();
    assert_eq!(
        ibwave(&["decouple", "--config", &path.to_string_lossy()]).0,
        2
    );
    let missing = dir.path().join("nothing");
    assert_eq!(
        ibwave(&["energy", "--out", &missing.to_string_lossy()]).0,
        2
    );
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = ibwave(&[
        "verify",
        "--seed",
        "7",
        "--out",
        &dir.path().to_string_lossy(),
    ]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("AC-1 PASS") && stdout.contains("AC-8 PASS"));
}
