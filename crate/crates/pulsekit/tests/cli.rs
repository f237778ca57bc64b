//! End-to-end checks of the command-line interface: exit codes, artifact
//! layout, determinism across reruns and thread counts.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pulsekit"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn base_config() -> String {
    r#"
[qubit]
anharmonicity_mhz = -295.1
rabi_max_mhz = 17.7
t1_us = 45.5
tphi_us = 20.6

[pulse]
source = "frog"
dt_ns = 0.5
"#
    .to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn pulsekit")
}

#[test]
fn unknown_subcommand_exits_2() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn missing_config_file_exits_2() {
    let tmp = TempDir::new().unwrap();
    let out = run(&[
        "rb",
        "--config",
        tmp.path().join("nope.toml").to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_eta_exits_2() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!(
            "{}\n[optimize]\ngate_time_ns = 112.0\neta = -0.1\ndelta_mhz = [0.0, 0.0]\nn_delta = 1\ngamma_mhz = [0.0, 0.0]\nn_gamma = 1\nseed = 1\n",
            base_config()
        ),
    );
    let out = run(&[
        "optimize",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta"));
}

#[test]
fn missing_section_exits_2() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), &base_config());
    let out = run(&[
        "scan",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[scan]"));
}

#[test]
fn rb_with_ideal_pulse_fits_zero_error() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        r#"
[qubit]
anharmonicity_mhz = -295.1
rabi_max_mhz = 17.7

[pulse]
source = "ideal"

[rb]
lengths = [1, 5, 20, 60]
n_random = 8
seed = 4
"#,
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "rb",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("rb_fit.json")).unwrap())
            .unwrap();
    assert!(fit["fitted_gate_error"].as_f64().unwrap().abs() < 1e-9);
    assert!(out_dir.join("rb_curve.csv").is_file());
    assert!(out_dir.join("manifest.json").is_file());
}

#[test]
fn scan_single_cell_grid_yields_one_row() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!(
            "{}\n[scan]\ndelta_mhz = [0.0, 0.0]\ngamma_mhz = [0.0, 0.0]\ngrid = [1, 1]\nn_c = 30\nn_random = 4\nseed = 9\n",
            base_config()
        ),
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "scan",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(out_dir.join("landscape.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let masks = std::fs::read_to_string(out_dir.join("contour_masks.csv")).unwrap();
    assert_eq!(masks.lines().count(), 2);
}

#[test]
fn scan_full_default_grid_yields_441_rows() {
    // The full measurement ranges on a 21×21 grid.
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!(
            "{}\n[scan]\ndelta_mhz = [-0.7, 0.7]\ngamma_mhz = [-3.5, 3.5]\ngrid = [21, 21]\nn_c = 60\nn_random = 10\nseed = 1\n",
            base_config()
        ),
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "scan",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("landscape.csv")).unwrap();
    assert_eq!(csv.lines().count(), 442);
}

#[test]
fn scan_output_is_independent_of_thread_count() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!(
            "{}\n[scan]\ndelta_mhz = [-0.3, 0.3]\ngamma_mhz = [-1.0, 1.0]\ngrid = [3, 4]\nn_c = 25\nn_random = 4\nseed = 13\n",
            base_config()
        ),
    );
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out_dir = tmp.path().join(format!("out{threads}"));
        let out = run(&[
            "scan",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(out.status.success());
        outputs.push(std::fs::read(out_dir.join("landscape.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn optimize_writes_reproducible_pulse() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!(
            "{}\n[optimize]\ngate_time_ns = 112.0\neta = 0.55\ndelta_mhz = [0.0, 0.0]\nn_delta = 1\ngamma_mhz = [0.0, 0.0]\nn_gamma = 1\nmax_iters = 120\nseed = 7\nrandom_starts = 0\nhalf_sine_start = true\n",
            base_config()
        ),
    );
    let mut pulses = Vec::new();
    for name in ["a", "b"] {
        let out_dir = tmp.path().join(name);
        let out = run(&[
            "optimize",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        pulses.push(std::fs::read(out_dir.join("pulse.txt")).unwrap());
        let summary: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(out_dir.join("optimize_summary.json")).unwrap(),
        )
        .unwrap();
        assert!(summary["feasible"].as_bool().unwrap());
        assert!(summary["ensemble_cost"].as_f64().unwrap() < 1e-6);
        assert!(out_dir.join("cost_history.csv").is_file());
        assert!(out_dir.join("manifest.json").is_file());
    }
    assert_eq!(pulses[0], pulses[1], "pulse files differ between reruns");
}

#[test]
fn optimized_pulse_file_feeds_other_commands() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!(
            "{}\n[optimize]\ngate_time_ns = 112.0\neta = 0.55\ndelta_mhz = [0.0, 0.0]\nn_delta = 1\ngamma_mhz = [0.0, 0.0]\nn_gamma = 1\nmax_iters = 120\nseed = 7\nrandom_starts = 0\nhalf_sine_start = true\n",
            base_config()
        ),
    );
    let opt_dir = tmp.path().join("opt");
    assert!(run(&[
        "optimize",
        "--config",
        config.to_str().unwrap(),
        "--out",
        opt_dir.to_str().unwrap(),
    ])
    .status
    .success());

    // Feed the produced pulse file into an RB run.
    let rb_config = write_config(
        &tmp.path().join("."),
        &format!(
            r#"
[qubit]
anharmonicity_mhz = -295.1
rabi_max_mhz = 17.7

[pulse]
source = "{}"

[rb]
lengths = [1, 10, 40]
n_random = 6
seed = 2
"#,
            opt_dir.join("pulse.txt").display()
        ),
    );
    let rb_dir = tmp.path().join("rb");
    let out = run(&[
        "rb",
        "--config",
        rb_config.to_str().unwrap(),
        "--out",
        rb_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(rb_dir.join("rb_fit.json")).unwrap())
            .unwrap();
    // A single-point-optimized pulse is clean at the nominal point.
    assert!(fit["fitted_gate_error"].as_f64().unwrap() < 1e-4);
}

#[test]
fn calibrate_writes_all_traces() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        r#"
[qubit]
anharmonicity_mhz = -295.1
rabi_max_mhz = 17.7
t1_us = 45.5
tphi_us = 20.6

[pulse]
source = "drag"
dt_ns = 0.5

[calibrate]
error_amp_max_n = 20
ramsey_max_us = 10.0
ramsey_points = 30
t1_max_us = 100.0
t1_points = 25
"#,
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "calibrate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--strict",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "amplitude_sweep.csv",
        "error_amplification.csv",
        "ramsey.csv",
        "t1_decay.csv",
        "calibration.json",
        "manifest.json",
    ] {
        assert!(out_dir.join(name).is_file(), "missing {name}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("calibration.json")).unwrap())
            .unwrap();
    assert!(summary["failures"].as_array().unwrap().is_empty());
    let t1 = summary["t1_us"].as_f64().unwrap();
    assert!((t1 - 45.5).abs() < 1.0, "t1 {t1}");
}

#[test]
fn drift_produces_report_and_is_thread_invariant() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        r#"
[qubit]
anharmonicity_mhz = -295.1
rabi_max_mhz = 17.7

[drift]
scenario = "day10-amplitude-ramp"
n_samples = 10
seed = 5
lambda = 0.001
lengths = [1, 40, 120]
n_random = 4
"#,
    );
    let mut campaigns = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = tmp.path().join(format!("out{threads}"));
        let out = run(&[
            "drift",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        campaigns.push(std::fs::read(out_dir.join("campaign.csv")).unwrap());
        assert!(out_dir.join("sensitivity_report.txt").is_file());
        assert!(out_dir.join("drift_fit.json").is_file());
    }
    assert_eq!(campaigns[0], campaigns[1]);
}

#[test]
fn seed_override_changes_outcome() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!(
            "{}\n[scan]\ndelta_mhz = [0.2, 0.2]\ngamma_mhz = [1.5, 1.5]\ngrid = [1, 1]\nn_c = 30\nn_random = 4\nseed = 9\n",
            base_config()
        ),
    );
    let mut results = Vec::new();
    for seed in ["9", "10"] {
        let out_dir = tmp.path().join(format!("out{seed}"));
        let out = run(&[
            "scan",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(out.status.success());
        results.push(std::fs::read_to_string(out_dir.join("landscape.csv")).unwrap());
    }
    assert_ne!(results[0], results[1]);
}
