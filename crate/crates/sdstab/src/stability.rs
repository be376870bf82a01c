//! Power stability, decay-rate fitting, and the numerical stability radius.
//!
//! The one-period closed-loop operator decides everything: the sampled loop
//! is exponentially stable with decay rate greater than `omega` exactly when
//! `exp(omega tau) Delta_D(tau)` is power stable, and on the truncation power
//! stability is the spectral-radius test `r < exp(-omega tau)`. The stability
//! radius search scans the perturbation scale `c`, brackets the first loss of
//! the margin and bisects it; the convergence study tabulates how fast the
//! perturbed semigroup and hold operators approach their nominal versions as
//! `c` goes to 0.
//!
//! Truncation is the one approximation made here, so every report carries the
//! truncation order it was computed at; rerunning at `2N` is the built-in
//! sensitivity diagnostic.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, spectral_radius, vector_q_norm};
use crate::perturbation::{build_perturbed_matrix, perturbed_semigroup_expm, TruncatedOperator};
use crate::sampled::{closed_loop, hold_nominal, hold_perturbed, SampledSystem, Trajectory};

/// Default number of pre-scan points guarding the bisection against a
/// non-monotone margin curve.
pub const DEFAULT_PRESCAN: usize = 32;

/// Spectral-radius stability report for one closed-loop operator.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub spectral_radius: f64,
    /// `exp(omega tau) * spectral_radius`; stable iff this is `< 1`.
    pub rate_margin: f64,
    pub verdict: bool,
    /// `(M, theta)` from a trajectory fit, when one was attached.
    pub power_fit: Option<(f64, f64)>,
    pub truncation: usize,
    pub tau: f64,
    pub omega: f64,
    /// Perturbation scale, when the caller provided it.
    pub scale: Option<f64>,
}

impl StabilityReport {
    /// Attach a decay fit; rejects `theta > 1`, which would contradict a
    /// decay statement.
    pub fn with_power_fit(mut self, m: f64, theta: f64) -> Result<Self> {
        if theta > 1.0 {
            return Err(Error::domain(format!(
                "power fit theta must not exceed 1, got {theta}"
            )));
        }
        self.power_fit = Some((m, theta));
        Ok(self)
    }

    pub fn with_scale(mut self, c: f64) -> Self {
        self.scale = Some(c);
        self
    }

    /// Key/value pairs (values already JSON-rendered) for report emission.
    pub fn json_fields(&self) -> Vec<(&'static str, String)> {
        let mut fields = vec![
            ("spectral_radius", format!("{}", self.spectral_radius)),
            ("rate_margin", format!("{}", self.rate_margin)),
            ("verdict", format!("{}", self.verdict)),
            ("truncation_N", format!("{}", self.truncation)),
            ("tau", format!("{}", self.tau)),
            ("omega", format!("{}", self.omega)),
        ];
        if let Some(c) = self.scale {
            fields.push(("c", format!("{c}")));
        }
        if let Some((m, theta)) = self.power_fit {
            fields.push(("power_fit_M", format!("{m}")));
            fields.push(("power_fit_theta", format!("{theta}")));
        }
        fields
    }
}

/// Decide power stability of `exp(omega tau) Delta` through the spectral
/// radius of the truncated closed-loop operator.
pub fn power_stability(delta: &TruncatedOperator, omega: f64, tau: f64) -> Result<StabilityReport> {
    if !(tau > 0.0) {
        return Err(Error::domain(format!("tau must be positive, got {tau}")));
    }
    if !(omega >= 0.0) {
        return Err(Error::domain(format!("omega must be nonnegative, got {omega}")));
    }
    let r = spectral_radius(delta.entries())?;
    let rate_margin = (omega * tau).exp() * r;
    Ok(StabilityReport {
        spectral_radius: r,
        rate_margin,
        verdict: rate_margin < 1.0,
        power_fit: None,
        truncation: delta.side(),
        tau,
        omega,
        scale: None,
    })
}

/// Least-squares decay fit `||x(k tau)|| ~ M theta^k ||x0||` over the
/// trajectory tail (last two thirds of the period boundaries).
///
/// Returns the deadbeat convention `(1, 0)` when the tail reaches exact
/// floating-point zero.
pub fn decay_fit(traj: &Trajectory) -> Result<(f64, f64)> {
    if let Some(k) = traj.overflow_at() {
        return Err(Error::FitUnavailable(format!("trajectory overflowed in period {k}")));
    }
    let norms = traj.boundary_norms();
    let periods = norms.len().saturating_sub(1);
    if periods < 12 {
        return Err(Error::FitUnavailable(format!(
            "need at least 12 periods, trajectory has {periods}"
        )));
    }
    let start = norms.len() / 3;
    let tail = &norms[start..];
    if tail.iter().any(|n| *n < 1e-300) {
        return Ok((1.0, 0.0));
    }
    let x0 = norms[0];
    if x0 < 1e-300 {
        return Ok((1.0, 0.0));
    }

    // Least squares of ln(norm) against the period index.
    let count = tail.len() as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (offset, n) in tail.iter().enumerate() {
        let k = (start + offset) as f64;
        let y = n.ln();
        sx += k;
        sy += y;
        sxx += k * k;
        sxy += k * y;
    }
    let slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    let intercept = (sy - slope * sx) / count;
    let theta = slope.exp();
    let m = (intercept.exp() / x0).max(1.0);
    Ok((m, theta))
}

/// Outcome of the stability-radius search.
#[derive(Debug, Clone)]
pub struct RadiusReport {
    /// Largest verified-stable scale: the lower bracket endpoint, or `c_max`
    /// when no crossing was found below it.
    pub c_hat_star: f64,
    pub bracket: (f64, f64),
    pub no_crossing: bool,
    /// `(c, spectral_radius)` samples from the pre-scan.
    pub curve: Vec<(f64, f64)>,
    /// Largest observed `|r(c) - r(c')| / |c - c'|` along the pre-scan grid.
    pub lipschitz_observed: f64,
    pub truncation: usize,
    pub tau: f64,
    pub omega: f64,
    pub tol_c: f64,
}

impl RadiusReport {
    pub fn json_fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("c_hat_star", format!("{}", self.c_hat_star)),
            ("bracket_lo", format!("{}", self.bracket.0)),
            ("bracket_hi", format!("{}", self.bracket.1)),
            ("no_crossing", format!("{}", self.no_crossing)),
            ("lipschitz_observed", format!("{}", self.lipschitz_observed)),
            ("truncation_N", format!("{}", self.truncation)),
            ("tau", format!("{}", self.tau)),
            ("omega", format!("{}", self.omega)),
            ("tol_c", format!("{}", self.tol_c)),
        ]
    }
}

fn rate_gap(sys: &SampledSystem, c: f64) -> Result<(f64, f64)> {
    let scaled = sys.with_scale(c)?;
    let delta = closed_loop(&scaled)?;
    let r = spectral_radius(delta.entries())?;
    Ok(((sys.omega() * sys.tau()).exp() * r - 1.0, r))
}

/// Bisection search for the first loss of the decay-rate margin along the
/// perturbation scale, using [`DEFAULT_PRESCAN`] pre-scan points.
///
/// The system's own scale is ignored; its direction and functional define the
/// unscaled perturbation. Requires the nominal loop (`c = 0`) to satisfy the
/// margin, otherwise [`Error::NominalUnstable`] is returned. Monotonicity of
/// the margin in `c` is not assumed: bisection tracks the first sign change
/// seen on the pre-scan grid.
pub fn stability_radius(sys: &SampledSystem, c_max: f64, tol_c: f64) -> Result<RadiusReport> {
    stability_radius_with_prescan(sys, c_max, tol_c, DEFAULT_PRESCAN)
}

/// [`stability_radius`] with an explicit pre-scan resolution.
pub fn stability_radius_with_prescan(
    sys: &SampledSystem,
    c_max: f64,
    tol_c: f64,
    prescan: usize,
) -> Result<RadiusReport> {
    if !(c_max > 0.0 && c_max <= 1.0) {
        return Err(Error::domain(format!("c_max must lie in (0, 1], got {c_max}")));
    }
    if !(tol_c > 0.0) {
        return Err(Error::domain(format!("tol_c must be positive, got {tol_c}")));
    }
    if prescan < 2 {
        return Err(Error::domain("pre-scan needs at least 2 points"));
    }

    let (g0, r0) = rate_gap(sys, 0.0)?;
    if g0 >= 0.0 {
        return Err(Error::NominalUnstable { spectral_radius: r0 });
    }

    let mut curve = Vec::with_capacity(prescan);
    curve.push((0.0, r0));
    let mut bracket: Option<(f64, f64)> = None;
    let mut prev = (0.0, g0);
    for k in 1..prescan {
        let c = c_max * k as f64 / (prescan - 1) as f64;
        let (g, r) = rate_gap(sys, c)?;
        curve.push((c, r));
        if bracket.is_none() && g >= 0.0 {
            bracket = Some((prev.0, c));
        }
        prev = (c, g);
    }

    let lipschitz_observed = curve
        .windows(2)
        .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
        .fold(0.0, f64::max);

    let (truncation, tau, omega) = (sys.generator().truncation(), sys.tau(), sys.omega());
    match bracket {
        None => Ok(RadiusReport {
            c_hat_star: c_max,
            bracket: (c_max, c_max),
            no_crossing: true,
            curve,
            lipschitz_observed,
            truncation,
            tau,
            omega,
            tol_c,
        }),
        Some((mut lo, mut hi)) => {
            while hi - lo > tol_c {
                let mid = 0.5 * (lo + hi);
                let (g, _) = rate_gap(sys, mid)?;
                if g < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(RadiusReport {
                c_hat_star: lo,
                bracket: (lo, hi),
                no_crossing: false,
                curve,
                lipschitz_observed,
                truncation,
                tau,
                omega,
                tol_c,
            })
        }
    }
}

/// One row of the small-scale convergence table.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub c: f64,
    /// `sup_t || T_c(t) - T(t) ||` over the `t` grid in `[0, tau]`.
    pub sup_semigroup_diff: f64,
    /// `sup_t || S_c(t) - S(t) ||` over the same grid.
    pub sup_hold_diff: f64,
    /// `sup_t || T_c(t) ||`, the uniform-boundedness column.
    pub sup_semigroup_norm: f64,
}

/// Tabulate `sup_t || T_c(t) - T(t) ||` and `sup_t || S_c(t) - S(t) ||` on a
/// `t_points`-node grid in `[0, tau]` for each scale in the descending grid.
pub fn convergence_study(
    sys: &SampledSystem,
    c_grid: &[f64],
    t_points: usize,
) -> Result<Vec<ConvergenceRow>> {
    if c_grid.is_empty() {
        return Err(Error::domain("convergence grid must be nonempty"));
    }
    if c_grid.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::domain("convergence grid entries must lie in [0, 1]"));
    }
    if c_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain("convergence grid must be strictly descending"));
    }
    if t_points < 2 {
        return Err(Error::domain("t grid needs at least 2 points"));
    }

    let gen = sys.generator();
    let q = gen.exponent();
    let n = gen.truncation();
    let tau = sys.tau();
    let nominal_sys = sys.nominal();
    let times: Vec<f64> =
        (0..t_points).map(|j| tau * j as f64 / (t_points - 1) as f64).collect();

    // Nominal diagonal path and hold columns, shared across scales.
    let nominal_semigroup: Vec<nalgebra::DMatrix<f64>> = times
        .iter()
        .map(|t| {
            nalgebra::DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    (gen.eigenvalues()[i] * t).exp()
                } else {
                    0.0
                }
            })
        })
        .collect();
    let nominal_holds: Vec<Vec<f64>> = times
        .iter()
        .map(|t| Ok(hold_nominal(&nominal_sys, *t)?.coefficients().to_vec()))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(c_grid.len());
    for &c in c_grid {
        if c == 0.0 {
            rows.push(ConvergenceRow {
                c,
                sup_semigroup_diff: 0.0,
                sup_hold_diff: 0.0,
                sup_semigroup_norm: nominal_semigroup
                    .iter()
                    .map(|m| operator_norm(m, q))
                    .fold(0.0, f64::max),
            });
            continue;
        }
        let scaled = sys.with_scale(c)?;
        let a_d = build_perturbed_matrix(gen, scaled.perturbation())?;
        let mut sup_t = 0.0f64;
        let mut sup_s = 0.0f64;
        let mut sup_norm = 0.0f64;
        for (j, t) in times.iter().enumerate() {
            let t_c = perturbed_semigroup_expm(&a_d, *t)?;
            sup_t = sup_t.max(operator_norm(&(t_c.entries() - &nominal_semigroup[j]), q));
            sup_norm = sup_norm.max(operator_norm(t_c.entries(), q));
            let s_c = hold_perturbed(&scaled, *t)?;
            let diff = s_c
                .coefficients()
                .iter()
                .zip(&nominal_holds[j])
                .map(|(a, b)| a - b);
            sup_s = sup_s.max(vector_q_norm(diff, q));
        }
        rows.push(ConvergenceRow {
            c,
            sup_semigroup_diff: sup_t,
            sup_hold_diff: sup_s,
            sup_semigroup_norm: sup_norm,
        });
    }
    Ok(rows)
}

/// One record of the `c`-curve CSV schema
/// (`c,spectral_radius,sup_T_diff,sup_S_diff`); missing columns are left
/// empty.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub c: f64,
    pub spectral_radius: Option<f64>,
    pub sup_t_diff: Option<f64>,
    pub sup_s_diff: Option<f64>,
}

pub fn write_curve_csv(points: &[CurvePoint], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "c,spectral_radius,sup_T_diff,sup_S_diff")?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for p in points {
        writeln!(
            out,
            "{},{},{},{}",
            p.c,
            cell(p.spectral_radius),
            cell(p.sup_t_diff),
            cell(p.sup_s_diff)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampled::simulate;
    use crate::spectral::{DiagonalGenerator, DualFunctional, ExtrapolationVector};
    use crate::{perturbation::RankOnePerturbation, sampled::ControlOperator};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn operator(entries: DMatrix<f64>) -> TruncatedOperator {
        let gen = DiagonalGenerator::new(vec![0.0; entries.nrows()], 2.0).unwrap();
        TruncatedOperator::new(entries, &gen).unwrap()
    }

    fn scalar_radius_system() -> SampledSystem {
        let gen = DiagonalGenerator::new(vec![0.0], 2.0).unwrap();
        SampledSystem::new(
            gen,
            ControlOperator::new(ExtrapolationVector::bounded(vec![1.0]).unwrap()),
            DualFunctional::new(vec![-1.0], 2.0).unwrap(),
            RankOnePerturbation::new(
                ExtrapolationVector::bounded(vec![1.0]).unwrap(),
                DualFunctional::new(vec![1.0], 2.0).unwrap(),
                1.0,
            )
            .unwrap(),
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn power_stability_basic_cases() {
        let half = operator(DMatrix::identity(3, 3) * 0.5);
        let rep = power_stability(&half, 0.0, 1.0).unwrap();
        assert_relative_eq!(rep.spectral_radius, 0.5, epsilon = 1e-12);
        assert!(rep.verdict);

        let zero = operator(DMatrix::zeros(3, 3));
        let rep = power_stability(&zero, 0.7, 0.3).unwrap();
        assert_eq!(rep.spectral_radius, 0.0);
        assert!(rep.verdict);
    }

    #[test]
    fn heat_without_feedback_is_not_exponentially_stable() {
        let sys = crate::sampled::tests::heat_system(8, 0.0, 0.05);
        let unforced = sys.with_feedback(DualFunctional::new(vec![0.0; 8], 2.0).unwrap()).unwrap();
        let delta = closed_loop(&unforced).unwrap();
        let rep = power_stability(&delta, 0.0, 0.05).unwrap();
        assert_relative_eq!(rep.spectral_radius, 1.0, epsilon = 1e-12);
        assert!(!rep.verdict);
    }

    #[test]
    fn spectral_radius_invariant_under_permutation_similarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let m = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
            let r = spectral_radius(&m).unwrap();
            // Random permutation similarity.
            let mut perm: Vec<usize> = (0..6).collect();
            for i in (1..6).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            let p = DMatrix::from_fn(6, 6, |i, j| if perm[i] == j { 1.0 } else { 0.0 });
            let sim = &p * &m * p.transpose();
            let r2 = spectral_radius(&sim).unwrap();
            assert!((r - r2).abs() <= 1e-10, "{r} vs {r2}");
        }
    }

    #[test]
    fn diagonal_radius_is_exact() {
        let sys = crate::sampled::tests::heat_system(6, 0.0, 0.05);
        let unforced = sys.with_feedback(DualFunctional::new(vec![0.0; 6], 2.0).unwrap()).unwrap();
        let delta = closed_loop(&unforced).unwrap();
        let r = spectral_radius(delta.entries()).unwrap();
        let expect = (sys.generator().spectral_bound() * 0.05).exp();
        assert!((r - expect).abs() <= 1e-13);
    }

    #[test]
    fn decay_fit_pure_geometric() {
        // Scalar loop contracting by exactly 1/2 each period.
        let gen = DiagonalGenerator::new(vec![-(2.0f64.ln())], 2.0).unwrap();
        let sys = SampledSystem::new(
            gen.clone(),
            ControlOperator::new(ExtrapolationVector::bounded(vec![0.0]).unwrap()),
            DualFunctional::new(vec![0.0], 2.0).unwrap(),
            RankOnePerturbation::zero(1, 2.0),
            1.0,
            0.0,
        )
        .unwrap();
        let x0 = gen.state(vec![1.0]).unwrap();
        let traj = simulate(&sys, &x0, 20, 1).unwrap();
        let (m, theta) = decay_fit(&traj).unwrap();
        assert_relative_eq!(theta, 0.5, max_relative = 1e-10);
        assert_relative_eq!(m, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn decay_fit_deadbeat_convention() {
        let gen = DiagonalGenerator::new(vec![0.0], 2.0).unwrap();
        let sys = SampledSystem::new(
            gen.clone(),
            ControlOperator::new(ExtrapolationVector::bounded(vec![1.0]).unwrap()),
            DualFunctional::new(vec![-1.0], 2.0).unwrap(),
            RankOnePerturbation::zero(1, 2.0),
            1.0,
            0.0,
        )
        .unwrap();
        let x0 = gen.state(vec![1.0]).unwrap();
        let traj = simulate(&sys, &x0, 15, 1).unwrap();
        let (_, theta) = decay_fit(&traj).unwrap();
        assert_eq!(theta, 0.0);
    }

    #[test]
    fn decay_fit_requires_enough_periods() {
        let gen = DiagonalGenerator::new(vec![-1.0], 2.0).unwrap();
        let sys = SampledSystem::new(
            gen.clone(),
            ControlOperator::new(ExtrapolationVector::bounded(vec![0.0]).unwrap()),
            DualFunctional::new(vec![0.0], 2.0).unwrap(),
            RankOnePerturbation::zero(1, 2.0),
            1.0,
            0.0,
        )
        .unwrap();
        let x0 = gen.state(vec![1.0]).unwrap();
        let traj = simulate(&sys, &x0, 5, 1).unwrap();
        assert!(decay_fit(&traj).is_err());
    }

    #[test]
    fn heat_decay_matches_spectrum() {
        let sys = crate::sampled::tests::heat_system(32, 0.05, 0.05);
        let delta = closed_loop(&sys).unwrap();
        let rep = power_stability(&delta, 0.0, 0.05).unwrap();
        assert!(rep.verdict);
        let x0 = sys.generator().state((0..32).map(|i| 1.0 / (i + 1) as f64).collect()).unwrap();
        let traj = simulate(&sys, &x0, 50, 2).unwrap();
        let (_, theta) = decay_fit(&traj).unwrap();
        let rel = (theta - rep.spectral_radius).abs() / rep.spectral_radius;
        assert!(rel <= 0.02, "theta {theta} vs spectral radius {}", rep.spectral_radius);
    }

    #[test]
    fn radius_zero_direction_reports_no_crossing() {
        let sys = scalar_radius_system()
            .with_perturbation(
                RankOnePerturbation::new(
                    ExtrapolationVector::bounded(vec![0.0]).unwrap(),
                    DualFunctional::new(vec![1.0], 2.0).unwrap(),
                    1.0,
                )
                .unwrap(),
            )
            .unwrap();
        let rep = stability_radius(&sys, 1.0, 1e-6).unwrap();
        assert!(rep.no_crossing);
        assert_eq!(rep.c_hat_star, 1.0);
        assert!(rep.lipschitz_observed.is_finite());
    }

    #[test]
    fn radius_scalar_matches_closed_form_oracle() {
        // Closed form of the one-period map: e^c - (e^c - 1)/c, which crosses
        // magnitude 1 exactly at c = 1. Oracle: bisection on the closed form
        // with the same first-crossing semantics, to width 1e-10.
        let oracle = {
            let g = |c: f64| {
                if c == 0.0 {
                    -1.0
                } else {
                    (c.exp() - (c.exp() - 1.0) / c).abs() - 1.0
                }
            };
            let points = 32;
            let mut bracket = None;
            let mut prev = 0.0;
            for k in 1..points {
                let c = k as f64 / (points - 1) as f64;
                if g(c) >= 0.0 {
                    bracket = Some((prev, c));
                    break;
                }
                prev = c;
            }
            match bracket {
                None => 1.0,
                Some((mut lo, mut hi)) => {
                    while hi - lo > 1e-10 {
                        let mid = 0.5 * (lo + hi);
                        if g(mid) < 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    lo
                }
            }
        };
        let rep = stability_radius(&scalar_radius_system(), 1.0, 1e-6).unwrap();
        assert!(
            (rep.c_hat_star - oracle).abs() <= 1e-6 + 1e-9,
            "search {} vs oracle {oracle}",
            rep.c_hat_star
        );
    }

    #[test]
    fn radius_bracket_endpoints_have_opposite_signs() {
        // Destabilizing scalar loop with an interior crossing: weaken the
        // feedback so instability arrives before c = 1.
        let gen = DiagonalGenerator::new(vec![0.0], 2.0).unwrap();
        let sys = SampledSystem::new(
            gen,
            ControlOperator::new(ExtrapolationVector::bounded(vec![1.0]).unwrap()),
            DualFunctional::new(vec![-1.0], 2.0).unwrap(),
            RankOnePerturbation::new(
                ExtrapolationVector::bounded(vec![3.0]).unwrap(),
                DualFunctional::new(vec![1.0], 2.0).unwrap(),
                1.0,
            )
            .unwrap(),
            1.0,
            0.0,
        )
        .unwrap();
        let rep = stability_radius(&sys, 1.0, 1e-8).unwrap();
        assert!(!rep.no_crossing);
        let (g_lo, _) = super::rate_gap(&sys, rep.bracket.0).unwrap();
        let (g_hi, _) = super::rate_gap(&sys, rep.bracket.1).unwrap();
        assert!(g_lo < 0.0 && g_hi >= 0.0, "g_lo {g_lo}, g_hi {g_hi}");
        assert!(rep.bracket.1 - rep.bracket.0 <= 1e-8);
    }

    #[test]
    fn radius_requires_nominal_stability() {
        let sys = scalar_radius_system()
            .with_feedback(DualFunctional::new(vec![0.0], 2.0).unwrap())
            .unwrap();
        match stability_radius(&sys, 1.0, 1e-6) {
            Err(Error::NominalUnstable { spectral_radius }) => {
                assert_relative_eq!(spectral_radius, 1.0, epsilon = 1e-12);
            }
            other => panic!("expected NominalUnstable, got {other:?}"),
        }
    }

    #[test]
    fn convergence_study_scalar_closed_form() {
        // T_c(t) = exp(-c t): sup over [0, 1] of |exp(-c t) - 1| = 1 - exp(-c).
        let gen = DiagonalGenerator::new(vec![0.0], 2.0).unwrap();
        let sys = SampledSystem::new(
            gen,
            ControlOperator::new(ExtrapolationVector::bounded(vec![0.0]).unwrap()),
            DualFunctional::new(vec![0.0], 2.0).unwrap(),
            RankOnePerturbation::new(
                ExtrapolationVector::bounded(vec![-1.0]).unwrap(),
                DualFunctional::new(vec![1.0], 2.0).unwrap(),
                1.0,
            )
            .unwrap(),
            1.0,
            0.0,
        )
        .unwrap();
        let rows = convergence_study(&sys, &[0.5, 0.1, 0.01], 64).unwrap();
        for row in &rows {
            assert_relative_eq!(
                row.sup_semigroup_diff,
                1.0 - (-row.c).exp(),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn convergence_study_zero_scale_row_is_exact() {
        let sys = crate::sampled::tests::heat_system(6, 0.5, 0.05);
        let rows = convergence_study(&sys, &[0.1, 0.0], 16).unwrap();
        let zero = rows.last().unwrap();
        assert_eq!(zero.sup_semigroup_diff, 0.0);
        assert_eq!(zero.sup_hold_diff, 0.0);
    }

    #[test]
    fn convergence_study_rejects_bad_grids() {
        let sys = crate::sampled::tests::heat_system(4, 0.5, 0.05);
        assert!(convergence_study(&sys, &[], 16).is_err());
        assert!(convergence_study(&sys, &[0.1, 0.5], 16).is_err());
        assert!(convergence_study(&sys, &[1.5, 0.5], 16).is_err());
    }

    #[test]
    fn curve_csv_schema() {
        let points = vec![
            CurvePoint { c: 0.1, spectral_radius: Some(0.5), sup_t_diff: None, sup_s_diff: None },
            CurvePoint {
                c: 0.2,
                spectral_radius: Some(0.6),
                sup_t_diff: Some(1e-3),
                sup_s_diff: Some(2e-3),
            },
        ];
        let mut buf = Vec::new();
        write_curve_csv(&points, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "c,spectral_radius,sup_T_diff,sup_S_diff");
        assert_eq!(lines.next().unwrap(), "0.1,0.5,,");
    }
}
