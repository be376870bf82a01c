//! End-to-end checks of the `sdstab` binary: exit codes, file outputs,
//! determinism, and the validate hooks.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdstab"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sdstab-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn json_number(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find(|l| l.contains(&format!("\"{key}\"")))
        .and_then(|l| l.split(':').nth(1))
        .and_then(|v| v.trim().trim_end_matches(',').parse::<f64>().ok())
        .unwrap_or_else(|| panic!("key {key} not found in report:\n{report}"))
}

const HEAT_SCENARIO: &str = "\
system.kind = heat
system.N = 16
loop.tau = 0.05
perturbation.c = 0.05
analysis.periods = 20
analysis.substeps = 4
output.full_states = true
";

#[test]
fn simulate_heat_scenario_writes_outputs() {
    let dir = temp_dir("simulate");
    let cfg = write_config(&dir, "heat.cfg", HEAT_SCENARIO);
    let out = dir.join("out");
    let result = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    assert!(out.join("trajectory.csv").exists());
    // Full-coefficient sidecar: plain text, all 16 coefficients per sample.
    let sidecar = std::fs::read_to_string(out.join("trajectory_states.txt")).unwrap();
    assert!(sidecar.starts_with("# time coeff_0 .. coeff_15"));
    assert_eq!(sidecar.lines().nth(1).unwrap().split_whitespace().count(), 17);
    let report = std::fs::read_to_string(out.join("stability_report.json")).unwrap();
    assert!(json_number(&report, "spectral_radius") < 1.0);
    assert!(report.contains("\"verdict\": true"));
    // Config echo makes the run reproducible from the report alone.
    assert!(report.contains("\"loop.tau\": \"0.05\""));
    assert!(report.contains("\"system.N\": \"16\""));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = temp_dir("determinism");
    let cfg = write_config(&dir, "heat.cfg", HEAT_SCENARIO);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("out{run}"));
        let result =
            bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
        assert_eq!(result.status.code(), Some(0));
        outputs.push(std::fs::read(out.join("trajectory.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "identical config must give identical bytes");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_errors_exit_2_and_name_every_key() {
    let dir = temp_dir("badcfg");
    let cfg = write_config(
        &dir,
        "bad.cfg",
        "system.kind = heat\nloop.tau = -1\nmystery.knob = 7\n",
    );
    let result = bin().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(result.status.code(), Some(2), "{result:?}");
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("tau"), "stderr: {stderr}");
    assert!(stderr.contains("mystery.knob"), "stderr: {stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_config_file_exits_2() {
    let result = bin().args(["simulate", "--config", "/nonexistent/nope.cfg"]).output().unwrap();
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn deadbeat_scalar_trajectory_is_zero_after_first_period() {
    let dir = temp_dir("deadbeat");
    let cfg = write_config(
        &dir,
        "deadbeat.cfg",
        "system.kind = custom\nsystem.N = 1\nsystem.eigenvalues = 0\nloop.b = 1\nloop.F = -1\n\
         loop.tau = 1\nloop.x0 = ones\nanalysis.periods = 4\nanalysis.substeps = 2\n",
    );
    let out = dir.join("out");
    let result = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut saw_tail_row = false;
    for line in csv.lines().skip(1) {
        let mut cells = line.split(',');
        let t: f64 = cells.next().unwrap().parse().unwrap();
        let norm: f64 = cells.next().unwrap().parse().unwrap();
        if t >= 1.0 {
            assert_eq!(norm, 0.0, "row at t={t} should be zero");
            saw_tail_row = true;
        }
    }
    assert!(saw_tail_row);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_overflow_exits_3() {
    let dir = temp_dir("overflow");
    // Unstable scalar mode with runaway feedback.
    let cfg = write_config(
        &dir,
        "unstable.cfg",
        "system.kind = custom\nsystem.N = 1\nsystem.eigenvalues = 1\nloop.b = 1\nloop.F = 5\n\
         loop.tau = 1\nanalysis.periods = 80\nanalysis.substeps = 1\n",
    );
    let out = dir.join("out");
    let result = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(result.status.code(), Some(3), "{result:?}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn radius_with_zero_direction_reports_no_crossing() {
    let dir = temp_dir("radius-nocross");
    let cfg = write_config(
        &dir,
        "nocross.cfg",
        "system.kind = custom\nsystem.N = 1\nsystem.eigenvalues = 0\nloop.b = 1\nloop.F = -1\n\
         loop.tau = 1\nperturbation.d = 0\nperturbation.h = 1\nperturbation.c = 1\n",
    );
    let out = dir.join("out");
    let result = bin().args(["radius", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let report = std::fs::read_to_string(out.join("radius_report.json")).unwrap();
    assert!(report.contains("\"no_crossing\": true"));
    assert_eq!(json_number(&report, "c_hat_star"), 1.0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn radius_heat_without_feedback_exits_4() {
    let dir = temp_dir("radius-hypothesis");
    let cfg = write_config(
        &dir,
        "unstable.cfg",
        "system.kind = heat\nsystem.N = 16\nloop.F = 0\nperturbation.c = 0.1\n",
    );
    let result = bin().args(["radius", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(result.status.code(), Some(4), "{result:?}");
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("spectral radius"), "stderr: {stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_writes_curve_with_documented_schema() {
    let dir = temp_dir("sweep");
    let cfg = write_config(
        &dir,
        "sweep.cfg",
        "system.kind = heat\nsystem.N = 12\nperturbation.c_grid = 0.1, 0.01, 0.001\n\
         analysis.t_points = 16\n",
    );
    let out = dir.join("out");
    let result = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "2"])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let csv = std::fs::read_to_string(out.join("sweep_curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "c,spectral_radius,sup_T_diff,sup_S_diff");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    // Descending grid, fully populated columns.
    let first: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(first[0], "0.1");
    assert!(first.iter().all(|cell| !cell.is_empty()));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn analyze_emits_diagnostics_and_doubling_check() {
    let dir = temp_dir("analyze");
    let cfg = write_config(&dir, "heat.cfg", HEAT_SCENARIO);
    let out = dir.join("out");
    let result = bin().args(["analyze", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let report = std::fs::read_to_string(out.join("analysis_report.json")).unwrap();
    assert!(json_number(&report, "alpha") < 1.0);
    assert!(json_number(&report, "resolvent_identity_residual") < 1e-10);
    assert!(json_number(&report, "volterra_norm_lower_bound") > 0.0);
    assert_eq!(json_number(&report, "truncation_2N"), 32.0);
    assert!(json_number(&report, "radius_shift_2N") < 1e-6);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn heat_demo_cross_validates() {
    let dir = temp_dir("heatdemo");
    let cfg = write_config(
        &dir,
        "demo.cfg",
        "system.kind = heat\nsystem.N = 16\nperturbation.c = 0.05\nanalysis.periods = 3\n\
         analysis.substeps = 5\nfd.points = 201\nfd.dt = 2e-4\n",
    );
    let out = dir.join("out");
    let result =
        bin().args(["heat-demo", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    assert!(out.join("spectral_trajectory.csv").exists());
    assert!(out.join("fd_trajectory.csv").exists());
    let report = std::fs::read_to_string(out.join("comparison_report.json")).unwrap();
    assert!(json_number(&report, "max_relative_gap") <= 1e-3, "{report}");
    assert!(report.contains("\"gap_within_1e3\": true"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn heat_demo_rejects_non_heat_scenarios() {
    let dir = temp_dir("heatdemo-kind");
    let cfg = write_config(
        &dir,
        "diag.cfg",
        "system.kind = diagonal\nsystem.N = 8\nsystem.gamma = 2\nsystem.kappa = 9.87\n",
    );
    let result = bin().args(["heat-demo", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("system.kind"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn validate_passes_and_injected_defect_fails_naming_the_suite() {
    let pristine = bin().args(["validate", "--truncation", "16"]).output().unwrap();
    assert_eq!(pristine.status.code(), Some(0), "{pristine:?}");
    let stdout = String::from_utf8_lossy(&pristine.stdout);
    assert!(stdout.contains("vcf_residual"));
    assert!(stdout.contains("radius_scalar_oracle"));

    let defective = bin()
        .args(["validate", "--truncation", "16", "--inject-eta-defect"])
        .output()
        .unwrap();
    assert_eq!(defective.status.code(), Some(1), "{defective:?}");
    let stdout = String::from_utf8_lossy(&defective.stdout);
    assert!(
        stdout.contains("failing suites: eta_consistency"),
        "stdout should name the failing suite:\n{stdout}"
    );
}

#[test]
fn validate_double_truncation_emits_sensitivity_table() {
    let result = bin()
        .args(["validate", "--truncation", "16", "--double-truncation"])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("truncation sensitivity:"));
    assert!(stdout.contains("N,spectral_radius,c_hat_star"));
    let table_rows = stdout.lines().filter(|l| l.trim_start().starts_with("16,") || l.trim_start().starts_with("32,")).count();
    assert_eq!(table_rows, 2, "{stdout}");
}

#[test]
fn truncation_flag_overrides_scenario() {
    let dir = temp_dir("override");
    let cfg = write_config(&dir, "heat.cfg", HEAT_SCENARIO);
    let out = dir.join("out");
    let result = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--truncation", "8"])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(0));
    let report = std::fs::read_to_string(out.join("stability_report.json")).unwrap();
    assert_eq!(json_number(&report, "truncation_N"), 8.0);
    std::fs::remove_dir_all(&dir).ok();
}
