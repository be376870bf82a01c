//! Implementations behind the CLI subcommands.
//!
//! Every command takes a resolved [`ScenarioConfig`], writes its artifacts
//! under the configured output directory and returns a process exit code:
//! 0 ok, 1 validation failure, 2 configuration error, 3 numerical overflow,
//! 4 hypothesis violation (nominal system unstable at the requested rate).
//! Reports embed the fully resolved configuration so a run can be reproduced
//! from its report alone.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use crate::config::{ScenarioConfig, SystemKind};
use crate::error::{Error, Result};
use crate::heat::{
    admissibility_probe, build_diagonal_system, build_heat_system, eta_consistency_residual,
    fd_simulate, heat_perturbation_coefficients, project_profile, DiagonalSystemSpec, FdGrid,
    HeatSystemSpec,
};
use crate::linalg::spectral_radius;
use crate::perturbation::{
    build_perturbed_matrix, lambda_star_search, perturbed_semigroup_expm,
    perturbed_semigroup_volterra, resolvent_identity_check, volterra_norm_estimate,
    RankOnePerturbation,
};
use crate::sampled::{
    closed_loop, hold_nominal, hold_nominal_via_resolvent, hold_perturbed,
    hold_perturbed_via_resolvent, simulate, ControlOperator, SampledSystem,
};
use crate::spectral::{DiagonalGenerator, DualFunctional, ExtrapolationVector};
use crate::stability::{
    decay_fit, power_stability, stability_radius_with_prescan, write_curve_csv, CurvePoint,
};

/// Map an error to the documented process exit codes.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Io(_) => 2,
        Error::NominalUnstable { .. } => 4,
        Error::OracleDivergence { .. } => 3,
        _ => 1,
    }
}

fn write_json_report(
    path: &Path,
    fields: &[(&str, String)],
    echo: &[(String, String)],
) -> Result<()> {
    let mut text = String::from("{\n");
    for (k, v) in fields {
        text.push_str(&format!("  \"{k}\": {v},\n"));
    }
    text.push_str("  \"config\": {\n");
    for (i, (k, v)) in echo.iter().enumerate() {
        let comma = if i + 1 == echo.len() { "" } else { "," };
        text.push_str(&format!("    \"{k}\": \"{v}\"{comma}\n"));
    }
    text.push_str("  }\n}\n");
    fs::write(path, text)?;
    Ok(())
}

fn ensure_out_dir(cfg: &ScenarioConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// `simulate`: run the loop, write the trajectory and a stability report.
pub fn cmd_simulate(cfg: &ScenarioConfig) -> Result<i32> {
    let dir = ensure_out_dir(cfg)?;
    let sys = cfg.build_system()?;
    let x0 = cfg.initial_state(&sys)?;
    let traj = simulate(&sys, &x0, cfg.periods, cfg.substeps)?;

    if cfg.formats.csv {
        let mut file = fs::File::create(dir.join("trajectory.csv"))?;
        traj.write_csv(&mut file)?;
    }
    if cfg.full_states {
        let mut file = fs::File::create(dir.join("trajectory_states.txt"))?;
        traj.write_full_states(&mut file)?;
    }

    let delta = closed_loop(&sys)?;
    let mut report = power_stability(&delta, sys.omega(), sys.tau())?.with_scale(cfg.scale);
    if let Ok((m, theta)) = decay_fit(&traj) {
        if theta <= 1.0 {
            report = report.with_power_fit(m, theta)?;
        }
    }
    if cfg.formats.json {
        let mut fields = report.json_fields();
        if let Some(k) = traj.overflow_at() {
            fields.push(("overflow_at_period", format!("{k}")));
        }
        write_json_report(&dir.join("stability_report.json"), &fields, &cfg.echo())?;
    }

    Ok(if traj.overflow_at().is_some() { 3 } else { 0 })
}

/// `analyze`: spectral-radius report plus resolvent and Volterra diagnostics
/// and the truncation-doubling check.
pub fn cmd_analyze(cfg: &ScenarioConfig) -> Result<i32> {
    let dir = ensure_out_dir(cfg)?;
    let sys = cfg.build_system()?;
    let delta = closed_loop(&sys)?;
    let report = power_stability(&delta, sys.omega(), sys.tau())?.with_scale(cfg.scale);
    let mut fields = report.json_fields();

    let lambda = lambda_star_search(sys.generator(), sys.perturbation())?;
    let identity = resolvent_identity_check(sys.generator(), sys.perturbation(), lambda)?;
    fields.push(("lambda_star", format!("{lambda}")));
    fields.push(("alpha", format!("{}", identity.alpha)));
    fields.push(("resolvent_identity_residual", format!("{}", identity.identity_residual)));

    let volterra = volterra_norm_estimate(
        sys.generator(),
        sys.perturbation(),
        cfg.probe_t1,
        cfg.probe_trials,
        cfg.seed,
    )?;
    fields.push(("volterra_norm_lower_bound", format!("{volterra}")));

    // Truncation sensitivity: rerun the spectral radius at 2N.
    if cfg.kind != SystemKind::Custom {
        let doubled = cfg.build_system_at(2 * cfg.truncation)?;
        let delta2 = closed_loop(&doubled)?;
        let r2 = spectral_radius(delta2.entries())?;
        fields.push(("truncation_2N", format!("{}", 2 * cfg.truncation)));
        fields.push(("spectral_radius_2N", format!("{r2}")));
        fields.push(("radius_shift_2N", format!("{}", (r2 - report.spectral_radius).abs())));
    }

    if cfg.formats.json {
        write_json_report(&dir.join("analysis_report.json"), &fields, &cfg.echo())?;
    }
    Ok(0)
}

/// `radius`: stability-radius search; exit 4 when the nominal loop misses the
/// decay-rate hypothesis.
pub fn cmd_radius(cfg: &ScenarioConfig) -> Result<i32> {
    let dir = ensure_out_dir(cfg)?;
    let sys = cfg.build_system()?;
    let report = stability_radius_with_prescan(&sys, cfg.c_max, cfg.tol_c, cfg.prescan)?;
    if cfg.formats.json {
        write_json_report(&dir.join("radius_report.json"), &report.json_fields(), &cfg.echo())?;
    }
    if cfg.formats.csv {
        let points: Vec<CurvePoint> = report
            .curve
            .iter()
            .map(|(c, r)| CurvePoint {
                c: *c,
                spectral_radius: Some(*r),
                sup_t_diff: None,
                sup_s_diff: None,
            })
            .collect();
        let mut file = fs::File::create(dir.join("radius_curve.csv"))?;
        write_curve_csv(&points, &mut file)?;
    }
    Ok(0)
}

/// `sweep`: evaluate the full c-curve (spectral radius plus sup-difference
/// columns) over `perturbation.c_grid` using a bounded worker pool; a single
/// collector writes the files.
pub fn cmd_sweep(cfg: &ScenarioConfig, workers: Option<usize>) -> Result<i32> {
    let dir = ensure_out_dir(cfg)?;
    let mut grid = cfg.c_grid.clone().ok_or_else(|| Error::Config {
        issues: vec!["perturbation.c_grid: required for sweep".into()],
    })?;
    grid.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    grid.dedup();

    let sys = cfg.build_system()?;
    let worker_count = workers
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
        .clamp(1, grid.len().max(1));

    let mut results: Vec<Option<CurvePoint>> = vec![None; grid.len()];
    let (tx, rx) = mpsc::channel::<(usize, Result<CurvePoint>)>();
    std::thread::scope(|scope| {
        for worker in 0..worker_count {
            let tx = tx.clone();
            let sys = &sys;
            let grid = &grid;
            let t_points = cfg.t_points;
            scope.spawn(move || {
                for idx in (worker..grid.len()).step_by(worker_count) {
                    let c = grid[idx];
                    let point = (|| -> Result<CurvePoint> {
                        let scaled = sys.with_scale(c)?;
                        let delta = closed_loop(&scaled)?;
                        let r = spectral_radius(delta.entries())?;
                        let rows = crate::stability::convergence_study(sys, &[c], t_points)?;
                        Ok(CurvePoint {
                            c,
                            spectral_radius: Some(r),
                            sup_t_diff: Some(rows[0].sup_semigroup_diff),
                            sup_s_diff: Some(rows[0].sup_hold_diff),
                        })
                    })();
                    if tx.send((idx, point)).is_err() {
                        return;
                    }
                }
            });
        }
        drop(tx);
        for (idx, point) in rx {
            results[idx] = Some(point?);
        }
        Ok::<(), Error>(())
    })?;

    let points: Vec<CurvePoint> =
        results.into_iter().map(|p| p.expect("all grid points evaluated")).collect();
    if cfg.formats.csv {
        let mut file = fs::File::create(dir.join("sweep_curve.csv"))?;
        write_curve_csv(&points, &mut file)?;
    }
    if cfg.formats.json {
        let max_t = points.iter().filter_map(|p| p.sup_t_diff).fold(0.0f64, f64::max);
        let max_s = points.iter().filter_map(|p| p.sup_s_diff).fold(0.0f64, f64::max);
        let fields = vec![
            ("points", format!("{}", points.len())),
            ("max_sup_T_diff", format!("{max_t}")),
            ("max_sup_S_diff", format!("{max_s}")),
            ("truncation_N", format!("{}", cfg.truncation)),
        ];
        write_json_report(&dir.join("sweep_report.json"), &fields, &cfg.echo())?;
    }
    Ok(0)
}

/// `heat-demo`: spectral model against the finite-difference oracle, with
/// trajectory CSVs and a comparison report.
pub fn cmd_heat_demo(cfg: &ScenarioConfig) -> Result<i32> {
    if cfg.kind != SystemKind::Heat {
        return Err(Error::Config {
            issues: vec!["system.kind: heat-demo requires system.kind = heat".into()],
        });
    }
    let dir = ensure_out_dir(cfg)?;
    let spec = HeatSystemSpec {
        truncation: cfg.truncation,
        feedback: cfg.feedback_or_default(),
        boundary: cfg.boundary.clone(),
        scale: cfg.scale,
        tau: cfg.tau,
        omega: cfg.omega,
    };
    let sys = build_heat_system(&spec)?;

    // Align the oracle step so the spectral sampling times sit on its grid.
    let blocks = (cfg.tau / (cfg.fd_dt * cfg.substeps as f64)).round().max(1.0) as usize;
    let dt = cfg.tau / (cfg.substeps * blocks) as f64;
    let grid = FdGrid::new(cfg.fd_points, dt, cfg.fd_scheme)?;

    let z0 = cfg.fd_initial_profile()?;
    let x0 = sys.generator().state(project_profile(&z0, cfg.truncation))?;
    let spectral = simulate(&sys, &x0, cfg.periods, cfg.substeps)?;
    let fd = fd_simulate(&spec, &grid, &z0, cfg.periods)?;
    let (gap, compared) = crate::heat::trajectory_gap_details(&spectral, &fd, 1e-6);

    if cfg.formats.csv {
        let mut file = fs::File::create(dir.join("spectral_trajectory.csv"))?;
        spectral.write_csv(&mut file)?;
        let mut file = fs::File::create(dir.join("fd_trajectory.csv"))?;
        fd.write_csv(&mut file)?;
    }
    if cfg.formats.json {
        let fields = vec![
            ("max_relative_gap", format!("{gap}")),
            ("gap_within_1e3", format!("{}", gap <= 1e-3 && compared > 0)),
            ("compared_samples", format!("{compared}")),
            ("fd_points", format!("{}", cfg.fd_points)),
            ("fd_dt", format!("{dt}")),
            ("truncation_N", format!("{}", cfg.truncation)),
            ("periods", format!("{}", cfg.periods)),
        ];
        write_json_report(&dir.join("comparison_report.json"), &fields, &cfg.echo())?;
    }
    Ok(if spectral.overflow_at().is_some() { 3 } else { 0 })
}

/// Options for [`cmd_validate`].
#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub truncation: usize,
    pub double_truncation: bool,
    /// Test hook: shift the first perturbation coefficient before the
    /// eta-representation check, which must then fail.
    pub inject_eta_defect: bool,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            truncation: 32,
            double_truncation: false,
            inject_eta_defect: false,
            seed: 0,
            out_dir: None,
        }
    }
}

struct SuiteResult {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn run_suite(name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> SuiteResult {
    match body() {
        Ok((pass, detail)) => SuiteResult { name, pass, detail },
        Err(err) => SuiteResult { name, pass: false, detail: format!("error: {err}") },
    }
}

fn validation_heat_system(n: usize, c: f64) -> Result<SampledSystem> {
    let mut spec = HeatSystemSpec::new(n);
    spec.scale = c;
    build_heat_system(&spec)
}

fn scalar_radius_system() -> Result<SampledSystem> {
    let gen = DiagonalGenerator::new(vec![0.0], 2.0)?;
    SampledSystem::new(
        gen,
        ControlOperator::new(ExtrapolationVector::bounded(vec![1.0])?),
        DualFunctional::new(vec![-1.0], 2.0)?,
        RankOnePerturbation::new(
            ExtrapolationVector::bounded(vec![1.0])?,
            DualFunctional::new(vec![1.0], 2.0)?,
            1.0,
        )?,
        1.0,
        0.0,
    )
}

/// `validate`: run the invariant suites, print one line per suite, exit 0
/// only when all pass.
pub fn cmd_validate(opts: &ValidateOptions) -> Result<i32> {
    let n = opts.truncation.max(4);
    let mut suites: Vec<SuiteResult> = Vec::new();

    suites.push(run_suite("vcf_residual", || {
        let sys = validation_heat_system(n, 0.2)?;
        let gen = sys.generator();
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
        let ts: Vec<f64> = (1..=8).map(|i| 0.1 * i as f64 / 8.0).collect();
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = crate::linalg::vector_q_norm(coeffs.iter().copied(), 2.0);
            let unit: Vec<f64> = coeffs.iter().map(|x| x / norm).collect();
            let x = gen.state(unit)?;
            let residuals =
                crate::perturbation::vcf_residuals(gen, sys.perturbation(), &x, &ts, 512)?;
            worst = worst.max(residuals.iter().copied().fold(0.0, f64::max));
        }
        Ok((worst <= 1e-8, format!("max residual {worst:.3e} (tol 1e-8)")))
    }));

    suites.push(run_suite("resolvent_identity", || {
        let mut worst = 0.0f64;
        let mut all_contract = true;
        for &c in &[0.1, 0.5, 1.0] {
            let sys = validation_heat_system(n, c)?;
            let lambda = lambda_star_search(sys.generator(), sys.perturbation())?;
            let rep = resolvent_identity_check(sys.generator(), sys.perturbation(), lambda)?;
            worst = worst.max(rep.identity_residual);
            all_contract &= rep.contraction;
        }
        Ok((worst <= 1e-10 && all_contract, format!("max residual {worst:.3e} (tol 1e-10)")))
    }));

    suites.push(run_suite("hold_representation", || {
        let nominal = validation_heat_system(n, 0.0)?;
        let perturbed = validation_heat_system(n, 0.1)?;
        let lambda =
            lambda_star_search(perturbed.generator(), perturbed.perturbation())?;
        let tau = nominal.tau();
        let mut worst_nominal = 0.0f64;
        let mut worst_perturbed = 0.0f64;
        for j in 0..32 {
            let t = tau * j as f64 / 31.0;
            let a = hold_nominal(&nominal, t)?;
            let b = hold_nominal_via_resolvent(&nominal, t, 1.0)?;
            for (x, y) in a.coefficients().iter().zip(b.coefficients()) {
                worst_nominal = worst_nominal.max((x - y).abs());
            }
            let a = hold_perturbed(&perturbed, t)?;
            let b = hold_perturbed_via_resolvent(&perturbed, t, lambda)?;
            for (x, y) in a.coefficients().iter().zip(b.coefficients()) {
                worst_perturbed = worst_perturbed.max((x - y).abs());
            }
        }
        Ok((
            worst_nominal <= 1e-11 && worst_perturbed <= 1e-9,
            format!("nominal {worst_nominal:.3e} (tol 1e-11), perturbed {worst_perturbed:.3e} (tol 1e-9)"),
        ))
    }));

    suites.push(run_suite("eta_consistency", || {
        let mut d = heat_perturbation_coefficients(16);
        if opts.inject_eta_defect {
            d[0] += 0.1;
        }
        let residual = eta_consistency_residual(&d, 4096)?;
        Ok((residual <= 1e-8, format!("residual {residual:.3e} (tol 1e-8)")))
    }));

    suites.push(run_suite("volterra_vs_expm", || {
        let sys = validation_heat_system(8, 0.1)?;
        let sol = perturbed_semigroup_volterra(sys.generator(), sys.perturbation(), 0.25, 64, 100, 1e-11)?;
        let a_d = build_perturbed_matrix(sys.generator(), sys.perturbation())?;
        let mut worst = 0.0f64;
        for (t, op) in sol.path.times().iter().zip(sol.path.samples()) {
            let reference = perturbed_semigroup_expm(&a_d, *t)?;
            worst = worst.max((op.entries() - reference.entries()).abs().max());
        }
        Ok((worst <= 1e-8, format!("max gap {worst:.3e} after {} sweeps (tol 1e-8)", sol.iterations)))
    }));

    suites.push(run_suite("fd_cross_validation", || {
        let mut spec = HeatSystemSpec::new(16);
        spec.scale = 0.05;
        let sys = build_heat_system(&spec)?;
        let g = 201;
        let grid = FdGrid::new(g, spec.tau / 250.0, crate::heat::FdScheme::Trapezoidal)?;
        let dx = 1.0 / (g - 1) as f64;
        let z0: Vec<f64> = (0..g)
            .map(|i| 1.0 + (std::f64::consts::PI * i as f64 * dx).cos())
            .collect();
        let x0 = sys.generator().state(project_profile(&z0, 16))?;
        let spectral = simulate(&sys, &x0, 3, 10)?;
        let fd = fd_simulate(&spec, &grid, &z0, 3)?;
        let (gap, compared) = crate::heat::trajectory_gap_details(&spectral, &fd, 1e-6);
        Ok((
            gap <= 1e-3 && compared > 0,
            format!("max relative gap {gap:.3e} over {compared} samples (tol 1e-3)"),
        ))
    }));

    suites.push(run_suite("admissibility_gate", || {
        let ok = DiagonalSystemSpec::new(1.0, 1.0, 0.0, 2.0, 8);
        let accepted = build_diagonal_system(&ok).is_ok()
            && (ok.admissibility_exponent() - 2.0).abs() < 1e-12;
        let rejected =
            build_diagonal_system(&DiagonalSystemSpec::new(1.0, 1.0, 0.0, 1.5, 8)).is_err();

        let ladder = [32, 64, 128, 256];
        let gen = DiagonalGenerator::new(crate::heat::heat_eigenvalues(256), 2.0)?;
        let good = ExtrapolationVector::bounded(heat_perturbation_coefficients(256))?;
        let good_pass =
            admissibility_probe(&gen, &good, 2.0, 0.1, 10, &ladder, opts.seed)?.pass;
        let bad = ExtrapolationVector::bounded_with_limit(
            (0..256).map(|k| k as f64).collect(),
            256.0,
        )?;
        let bad_flagged =
            !admissibility_probe(&gen, &bad, 2.0, 0.1, 10, &ladder, opts.seed)?.pass;
        Ok((
            accepted && rejected && good_pass && bad_flagged,
            format!(
                "gate accept {accepted}, gate reject {rejected}, probe pass {good_pass}, defect flagged {bad_flagged}"
            ),
        ))
    }));

    suites.push(run_suite("radius_scalar_oracle", || {
        let sys = scalar_radius_system()?;
        let rep = crate::stability::stability_radius(&sys, 1.0, 1e-6)?;
        // Closed form e^c - (e^c - 1)/c crosses magnitude 1 exactly at c = 1.
        let oracle = 1.0;
        let gap = (rep.c_hat_star - oracle).abs();
        Ok((gap <= 1e-6 + 1e-9, format!("|c_hat_star - 1| = {gap:.3e} (tol 1e-6)")))
    }));

    let mut all_pass = true;
    println!("validation suites (truncation {n}):");
    for suite in &suites {
        let status = if suite.pass { "pass" } else { "FAIL" };
        println!("  {:<24} {:>4}  {}", suite.name, status, suite.detail);
        all_pass &= suite.pass;
    }
    if !all_pass {
        let failing: Vec<&str> =
            suites.iter().filter(|s| !s.pass).map(|s| s.name).collect();
        println!("failing suites: {}", failing.join(", "));
    }

    if opts.double_truncation {
        println!("truncation sensitivity:");
        println!("  N,spectral_radius,c_hat_star");
        for factor in [1usize, 2] {
            let m = n * factor;
            let sys = validation_heat_system(m, 0.0)?;
            let delta = closed_loop(&sys)?;
            let r = spectral_radius(delta.entries())?;
            let radius = crate::stability::stability_radius(&sys, 1.0, 1e-4)?;
            println!("  {m},{r},{}", radius.c_hat_star);
        }
    }

    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir)?;
        let mut fields: Vec<(&str, String)> = vec![("all_pass", format!("{all_pass}"))];
        for suite in &suites {
            fields.push((suite.name, format!("{}", suite.pass)));
        }
        write_json_report(&dir.join("validation_report.json"), &fields, &[])?;
    }

    Ok(if all_pass { 0 } else { 1 })
}
