//! End-to-end checks of the `memfir` binary: exit codes, artifact layout,
//! and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn memfir(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memfir"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad_flag = memfir(&["run", "--no-such-flag"], dir.path());
    assert_eq!(bad_flag.status.code(), Some(1));

    let bad_cmd = memfir(&["frobnicate"], dir.path());
    assert_eq!(bad_cmd.status.code(), Some(1));

    let bad_preset = memfir(&["run", "--preset", "paper-exp9"], dir.path());
    assert_eq!(bad_preset.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_preset.stderr).contains("paper-exp9"));

    let conflict = memfir(&["run", "--preset", "paper-exp1", "--config", "x.toml"], dir.path());
    assert_eq!(conflict.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_0() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(memfir(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(memfir(&["--version"], dir.path()).status.code(), Some(0));
    assert_eq!(memfir(&["tune", "--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");

    fs::write(&path, "not_a_key = true\n").unwrap();
    let unknown = memfir(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("not_a_key"));

    fs::write(&path, "targets_ohms = [2000.0, 2000.0]\n").unwrap();
    let mismatch = memfir(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(mismatch.status.code(), Some(1));

    let missing = memfir(&["run", "--config", "absent.toml"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn non_convergence_exits_2_with_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("starved.toml"),
        "targets_ohms = [120000.0, 120000.0, 120000.0, 120000.0, 120000.0, 120000.0]\n\
         [tune]\nmax_pulses = 1\n",
    )
    .unwrap();
    let out = memfir(&["run", "--config", "starved.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.path().join("o/tune_tap0.csv").exists());
    assert!(dir.path().join("o/manifest.json").exists());
    assert!(!dir.path().join("o/signal.csv").exists());
}

#[test]
fn sweep_writes_the_loop_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = memfir(&["sweep", "--out", "iv", "--v-peaks", "0.2,1.5"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let sub = fs::read_to_string(dir.path().join("iv/sweep_200mV.csv")).unwrap();
    assert!(sub.starts_with("v_volts,i_amperes\n"));
    assert!(dir.path().join("iv/sweep_1500mV.csv").exists());
    assert!(dir.path().join("iv/manifest.json").exists());
}

#[test]
fn run_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    // trimmed probe set keeps the double run quick
    fs::write(
        dir.path().join("cfg.toml"),
        "[analysis]\nprobe_freqs = [600.0, 2400.0]\nn_periods = 10\nn_points = 401\n",
    )
    .unwrap();
    let first = memfir(&["run", "--config", "cfg.toml", "--seed", "7", "--out", "a"], dir.path());
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let second = memfir(&["run", "--config", "cfg.toml", "--seed", "7", "--out", "b"], dir.path());
    assert_eq!(second.status.code(), Some(0));

    for name in
        ["signal.csv", "metrics.txt", "response_analytic.csv", "response_measured.csv", "tune_tap0.csv"]
    {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across identical seeds");
    }
    // stdout matches except the final "wrote N files to <dir>" line
    let body = |out: &[u8]| {
        String::from_utf8(out.to_vec())
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("wrote "))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body(&first.stdout), body(&second.stdout));

    let third = memfir(&["run", "--config", "cfg.toml", "--seed", "8", "--out", "c"], dir.path());
    assert_eq!(third.status.code(), Some(0));
    let a = fs::read(dir.path().join("a/signal.csv")).unwrap();
    let c = fs::read(dir.path().join("c/signal.csv")).unwrap();
    assert_ne!(a, c, "different seeds must change the stimulus");
}

#[test]
fn freqresp_emits_both_curves() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.toml"),
        "[analysis]\nprobe_freqs = [600.0, 1200.0]\nn_periods = 10\n",
    )
    .unwrap();
    let out = memfir(&["freqresp", "--config", "cfg.toml", "--out", "fr"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let analytic = fs::read_to_string(dir.path().join("fr/response_analytic.csv")).unwrap();
    assert!(analytic.starts_with("freq_hz,magnitude\n"));
    let measured = fs::read_to_string(dir.path().join("fr/response_measured.csv")).unwrap();
    assert_eq!(measured.lines().count(), 3); // header + one row per probe
}

#[test]
fn demo_paper_writes_combined_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = memfir(&["demo-paper", "--out", "demo", "--seed", "42"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(dir.path().join("demo/metrics.txt")).unwrap();
    for key in
        ["noise_reduction_factor=", "cutoff_hz_config1=", "cutoff_hz_config2=", "cutoff_ratio=", "sine_amplitude_ratio="]
    {
        assert!(metrics.contains(key), "missing {key} in:\n{metrics}");
    }
    assert!(dir.path().join("demo/exp1/signal.csv").exists());
    assert!(dir.path().join("demo/exp2/response_measured.csv").exists());

    let reject = memfir(&["demo-paper", "--preset", "paper-exp1"], dir.path());
    assert_eq!(reject.status.code(), Some(1));
}
