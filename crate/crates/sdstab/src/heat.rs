//! The two worked systems: a heated rod with boundary control and boundary
//! perturbation, and its power-law diagonal generalization on l^q.
//!
//! The rod of unit length with Neumann data carries the cosine basis
//! `f_0 = 1`, `f_n = sqrt(2) cos(n pi xi)` and eigenvalues
//! `lambda_n = -n^2 pi^2`. A heat flux at `xi = 1` is the control channel and
//! a flux at `xi = 0` the perturbation channel; their coefficient columns are
//! `b = (1, -sqrt2, sqrt2, ...)` and `d = (-1, -sqrt2, -sqrt2, ...)`. The
//! boundary profile `eta(xi) = -(e^xi + e^2 e^-xi)/(e^2 - 1)` reproduces the
//! perturbation column through `(1 - lambda_n) <eta, f_n> = d_n`, which
//! [`eta_consistency_check`] verifies by quadrature.
//!
//! The diagonal family sets `lambda_n = -kappa n^gamma + zeta` on l^q and is
//! only accepted under the exponent condition `q >= (gamma+1)/gamma`; the
//! induced admissibility exponent is `p = gamma q / (gamma q - 1)`.
//! [`admissibility_probe`] gives numerical (not certified) evidence that a
//! coefficient direction is an admissible input element by driving it with
//! unit-L^p signals and watching the truncated norms stabilize along a ladder
//! of truncation orders.
//!
//! A dense finite-difference discretization of the rod, [`fd_simulate`],
//! serves as an independent oracle for the spectral model.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{exp_moments, vector_q_norm};
use crate::perturbation::RankOnePerturbation;
use crate::sampled::{ControlOperator, SampledSystem, Trajectory, OVERFLOW_NORM};
use crate::spectral::{DiagonalGenerator, DualFunctional, ExtrapolationVector};

/// `lambda_n = -n^2 pi^2` for `n = 0..N-1`.
pub fn heat_eigenvalues(n: usize) -> Vec<f64> {
    // 0.0 - x rather than -x keeps the leading eigenvalue a positive zero.
    (0..n).map(|k| 0.0 - ((k * k) as f64) * std::f64::consts::PI.powi(2)).collect()
}

/// Control column of the rod: `b_0 = 1`, `b_n = (-1)^n sqrt(2)`.
pub fn heat_control_coefficients(n: usize) -> Vec<f64> {
    let s = 2.0f64.sqrt();
    (0..n)
        .map(|k| if k == 0 { 1.0 } else if k % 2 == 0 { s } else { -s })
        .collect()
}

/// Perturbation column of the rod: `d_0 = -1`, `d_n = -sqrt(2)`.
pub fn heat_perturbation_coefficients(n: usize) -> Vec<f64> {
    let s = 2.0f64.sqrt();
    (0..n).map(|k| if k == 0 { -1.0 } else { -s }).collect()
}

/// Cosine basis function `f_n` evaluated at `xi`.
pub fn cosine_mode(n: usize, xi: f64) -> f64 {
    if n == 0 {
        1.0
    } else {
        2.0f64.sqrt() * (n as f64 * std::f64::consts::PI * xi).cos()
    }
}

/// Boundary profile whose smoothed image reproduces the perturbation column.
pub fn boundary_profile(xi: f64) -> f64 {
    let e2 = std::f64::consts::E * std::f64::consts::E;
    -(xi.exp() + e2 * (-xi).exp()) / (e2 - 1.0)
}

fn pad_to(coeffs: &[f64], n: usize, what: &str) -> Result<Vec<f64>> {
    if coeffs.len() > n {
        return Err(Error::dimension(format!(
            "{what} has {} coefficients but the truncation is {n}",
            coeffs.len()
        )));
    }
    let mut out = coeffs.to_vec();
    out.resize(n, 0.0);
    Ok(out)
}

/// Scenario for the heated rod.
#[derive(Debug, Clone)]
pub struct HeatSystemSpec {
    pub truncation: usize,
    /// Feedback coefficients (padded with zeros up to the truncation).
    pub feedback: Vec<f64>,
    /// Boundary functional coefficients for the perturbation channel.
    pub boundary: Vec<f64>,
    /// Perturbation scale `c` in `[0, 1]`.
    pub scale: f64,
    pub tau: f64,
    pub omega: f64,
}

impl HeatSystemSpec {
    /// Defaults: the shipped stabilizing feedback `F = -10 <., f_0>` (which
    /// stabilizes the nominal loop for sampling periods up to about 0.15),
    /// boundary functional `H = -<., f_0>`, no perturbation, `tau = 0.05`.
    ///
    /// The sign of the default `H` makes the perturbation load the slow mode
    /// against its damping (`d_0 h_0 > 0`), the adversarial orientation a
    /// robustness study is after; the aligned orientation only adds damping.
    pub fn new(truncation: usize) -> Self {
        Self {
            truncation,
            feedback: vec![-10.0],
            boundary: vec![-1.0],
            scale: 0.0,
            tau: 0.05,
            omega: 0.0,
        }
    }
}

/// Instantiate the heated rod as a sampled-data loop on l^2.
pub fn build_heat_system(spec: &HeatSystemSpec) -> Result<SampledSystem> {
    if spec.truncation < 2 {
        return Err(Error::domain(format!(
            "heat system needs truncation >= 2, got {}",
            spec.truncation
        )));
    }
    let n = spec.truncation;
    let gen = DiagonalGenerator::new(heat_eigenvalues(n), 2.0)?;
    let control = ControlOperator::new(ExtrapolationVector::bounded(heat_control_coefficients(n))?);
    let feedback = DualFunctional::new(pad_to(&spec.feedback, n, "feedback")?, 2.0)?;
    let perturbation = RankOnePerturbation::new(
        ExtrapolationVector::bounded(heat_perturbation_coefficients(n))?,
        DualFunctional::new(pad_to(&spec.boundary, n, "boundary functional")?, 2.0)?,
        spec.scale,
    )?;
    SampledSystem::new(gen, control, feedback, perturbation, spec.tau, spec.omega)
}

fn simpson_weights(intervals: usize, h: f64) -> Vec<f64> {
    // Composite Simpson; an odd interval count gets a trapezoid tail.
    let even = intervals % 2 == 0;
    let simpson_part = if even { intervals } else { intervals - 1 };
    let mut w = vec![0.0; intervals + 1];
    for i in 0..=simpson_part {
        let factor = if i == 0 || i == simpson_part {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        w[i] += factor * h / 3.0;
    }
    if !even {
        w[intervals - 1] += h / 2.0;
        w[intervals] += h / 2.0;
    }
    w
}

/// Project a uniform-grid profile on `[0, 1]` onto the leading cosine modes
/// by composite Simpson quadrature.
pub fn project_profile(z: &[f64], modes: usize) -> Vec<f64> {
    let g = z.len();
    let dx = 1.0 / (g - 1) as f64;
    let w = simpson_weights(g - 1, dx);
    (0..modes)
        .map(|k| (0..g).map(|i| w[i] * z[i] * cosine_mode(k, i as f64 * dx)).sum())
        .collect()
}

/// Max residual of `(1 - lambda_n) <eta, f_n> = d_n` against a supplied
/// perturbation column, with the pairing computed by composite Simpson.
pub fn eta_consistency_residual(d: &[f64], quad_points: usize) -> Result<f64> {
    if quad_points < 512 {
        return Err(Error::domain(format!(
            "eta check needs at least 512 quadrature points, got {quad_points}"
        )));
    }
    let m = quad_points + quad_points % 2;
    let h = 1.0 / m as f64;
    let w = simpson_weights(m, h);
    let eigen = heat_eigenvalues(d.len());
    let mut worst = 0.0f64;
    for (n, dn) in d.iter().enumerate() {
        let mut pairing = 0.0;
        for (i, wi) in w.iter().enumerate() {
            let xi = i as f64 * h;
            pairing += wi * boundary_profile(xi) * cosine_mode(n, xi);
        }
        let residual = ((1.0 - eigen[n]) * pairing - dn).abs();
        worst = worst.max(residual);
    }
    Ok(worst)
}

/// [`eta_consistency_residual`] against the canonical rod column.
pub fn eta_consistency_check(n: usize, quad_points: usize) -> Result<f64> {
    eta_consistency_residual(&heat_perturbation_coefficients(n), quad_points)
}

/// Scenario for the power-law diagonal family on l^q.
#[derive(Debug, Clone)]
pub struct DiagonalSystemSpec {
    pub kappa: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub q: f64,
    pub truncation: usize,
    /// Control column; defaults to the rod pattern when empty.
    pub control: Vec<f64>,
    /// Perturbation direction; defaults to the rod pattern when empty.
    pub direction: Vec<f64>,
    /// Perturbation functional coefficients.
    pub boundary: Vec<f64>,
    pub feedback: Vec<f64>,
    pub scale: f64,
    pub tau: f64,
    pub omega: f64,
}

impl DiagonalSystemSpec {
    pub fn new(kappa: f64, gamma: f64, zeta: f64, q: f64, truncation: usize) -> Self {
        Self {
            kappa,
            gamma,
            zeta,
            q,
            truncation,
            control: Vec::new(),
            direction: Vec::new(),
            boundary: vec![-1.0],
            feedback: vec![-10.0],
            scale: 0.0,
            tau: 0.05,
            omega: 0.0,
        }
    }

    /// Required exponent floor `(gamma + 1) / gamma`.
    pub fn exponent_floor(&self) -> f64 {
        (self.gamma + 1.0) / self.gamma
    }

    /// Admissibility exponent `p = gamma q / (gamma q - 1)`.
    pub fn admissibility_exponent(&self) -> f64 {
        self.gamma * self.q / (self.gamma * self.q - 1.0)
    }
}

/// Instantiate the diagonal family; rejects exponents below the admissibility
/// floor `q >= (gamma + 1) / gamma`.
pub fn build_diagonal_system(spec: &DiagonalSystemSpec) -> Result<SampledSystem> {
    if !(spec.kappa > 0.0) || !(spec.gamma > 0.0) {
        return Err(Error::domain("kappa and gamma must be positive"));
    }
    let floor = spec.exponent_floor();
    if spec.q < floor {
        return Err(Error::Admissibility { q: spec.q, gamma: spec.gamma, required: floor });
    }
    let n = spec.truncation;
    if n < 1 {
        return Err(Error::domain("truncation must be at least 1"));
    }
    let eigen: Vec<f64> =
        (0..n).map(|k| -spec.kappa * (k as f64).powf(spec.gamma) + spec.zeta).collect();
    let gen = DiagonalGenerator::new(eigen, spec.q)?;
    let control_coeffs = if spec.control.is_empty() {
        heat_control_coefficients(n)
    } else {
        pad_to(&spec.control, n, "control column")?
    };
    let direction_coeffs = if spec.direction.is_empty() {
        heat_perturbation_coefficients(n)
    } else {
        pad_to(&spec.direction, n, "perturbation direction")?
    };
    let control = ControlOperator::new(ExtrapolationVector::bounded(control_coeffs)?);
    let perturbation = RankOnePerturbation::new(
        ExtrapolationVector::bounded(direction_coeffs)?,
        DualFunctional::new(pad_to(&spec.boundary, n, "boundary functional")?, spec.q)?,
        spec.scale,
    )?;
    let feedback = DualFunctional::new(pad_to(&spec.feedback, n, "feedback")?, spec.q)?;
    let mut sys = SampledSystem::new(gen, control, feedback, perturbation, spec.tau, spec.omega)?;
    sys.set_admissibility_exponent(spec.admissibility_exponent());
    Ok(sys)
}

/// Time-stepping scheme of the finite-difference oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    ImplicitEuler,
    Trapezoidal,
}

/// Spatial/temporal resolution of the finite-difference oracle.
#[derive(Debug, Clone, Copy)]
pub struct FdGrid {
    pub points: usize,
    pub dt: f64,
    pub scheme: FdScheme,
}

impl FdGrid {
    pub fn new(points: usize, dt: f64, scheme: FdScheme) -> Result<Self> {
        if points < 16 {
            return Err(Error::domain(format!("grid needs at least 16 points, got {points}")));
        }
        if !(dt > 0.0) {
            return Err(Error::domain(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { points, dt, scheme })
    }
}

impl Default for FdGrid {
    fn default() -> Self {
        Self { points: 401, dt: 1e-4, scheme: FdScheme::Trapezoidal }
    }
}

/// Finite-difference run of the rod, projected onto the leading cosine modes.
///
/// Ghost nodes give second-order Neumann boundaries. The controlled flux at
/// `xi = 1` is frozen over each sampling period (zero-order hold); the
/// perturbation flux at `xi = 0` tracks `c H z` continuously and is folded
/// into the implicit solve. Purely an oracle for the spectral model.
pub fn fd_simulate(
    spec: &HeatSystemSpec,
    grid: &FdGrid,
    z0: &[f64],
    periods: usize,
) -> Result<Trajectory> {
    if spec.truncation < 2 {
        return Err(Error::domain("heat system needs truncation >= 2"));
    }
    if periods < 1 {
        return Err(Error::domain("periods must be at least 1"));
    }
    let g = grid.points;
    if z0.len() != g {
        return Err(Error::dimension(format!(
            "initial profile has {} samples, grid has {g} points",
            z0.len()
        )));
    }
    let n = spec.truncation;
    let gen = DiagonalGenerator::new(heat_eigenvalues(n), 2.0)?;
    let dx = 1.0 / (g - 1) as f64;
    let w = simpson_weights(g - 1, dx);

    // Spatial representers of the feedback and boundary functionals.
    let feedback = pad_to(&spec.feedback, n, "feedback")?;
    let boundary = pad_to(&spec.boundary, n, "boundary functional")?;
    let profile = |coeffs: &[f64], xi: f64| -> f64 {
        coeffs.iter().enumerate().map(|(k, c)| c * cosine_mode(k, xi)).sum()
    };
    let f_weights: Vec<f64> =
        (0..g).map(|i| w[i] * profile(&feedback, i as f64 * dx)).collect();
    let h_weights: Vec<f64> =
        (0..g).map(|i| w[i] * profile(&boundary, i as f64 * dx)).collect();

    // Semi-discrete operator with the perturbation folded into row 0.
    let mut a = DMatrix::zeros(g, g);
    let inv2 = 1.0 / (dx * dx);
    a[(0, 0)] = -2.0 * inv2;
    a[(0, 1)] = 2.0 * inv2;
    for j in 0..g {
        a[(0, j)] -= 2.0 / dx * spec.scale * h_weights[j];
    }
    for i in 1..g - 1 {
        a[(i, i - 1)] = inv2;
        a[(i, i)] = -2.0 * inv2;
        a[(i, i + 1)] = inv2;
    }
    a[(g - 1, g - 2)] = 2.0 * inv2;
    a[(g - 1, g - 1)] = -2.0 * inv2;

    let steps_per_period = (spec.tau / grid.dt).round().max(1.0);
    if steps_per_period > 1e7 {
        return Err(Error::domain(format!(
            "fd time step {} gives {steps_per_period:.0} steps per period",
            grid.dt
        )));
    }
    let steps_per_period = steps_per_period as usize;
    let dt = spec.tau / steps_per_period as f64;

    let identity = DMatrix::<f64>::identity(g, g);
    let (lhs, rhs) = match grid.scheme {
        FdScheme::Trapezoidal => (&identity - &a * (dt / 2.0), Some(&identity + &a * (dt / 2.0))),
        FdScheme::ImplicitEuler => (&identity - &a * dt, None),
    };
    let lu = lhs.lu();

    let project = |z: &DVector<f64>| -> Vec<f64> {
        (0..n)
            .map(|k| (0..g).map(|i| w[i] * z[i] * cosine_mode(k, i as f64 * dx)).sum())
            .collect()
    };

    let mut z = DVector::from_column_slice(z0);
    let mut times = Vec::with_capacity(periods * steps_per_period + 1);
    let mut states = Vec::with_capacity(periods * steps_per_period + 1);
    let mut norms = Vec::with_capacity(periods * steps_per_period + 1);
    let coeffs = project(&z);
    norms.push(vector_q_norm(coeffs.iter().copied(), 2.0));
    states.push(gen.state(coeffs)?);
    times.push(0.0);

    let forcing_gain = 2.0 / dx;
    for k in 0..periods {
        // Zero-order hold: flux at xi = 1 frozen at F z(k tau).
        let u: f64 = f_weights.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
        for j in 1..=steps_per_period {
            let mut rhs_vec = match &rhs {
                Some(m) => m * &z,
                None => z.clone(),
            };
            rhs_vec[g - 1] += dt * forcing_gain * u;
            z = lu
                .solve(&rhs_vec)
                .ok_or_else(|| Error::Singular("finite-difference step".into()))?;
            let coeffs = project(&z);
            let norm = vector_q_norm(coeffs.iter().copied(), 2.0);
            norms.push(norm);
            states.push(gen.state(coeffs)?);
            times.push(k as f64 * spec.tau + j as f64 * dt);
            if norm > OVERFLOW_NORM {
                return Err(Error::OracleDivergence { step: k * steps_per_period + j, norm });
            }
        }
    }
    Ok(Trajectory::from_parts(times, states, norms, spec.tau, steps_per_period))
}

/// Largest relative l^2 gap between two mode-coefficient trajectories over
/// their common sample times.
///
/// Times are matched within an absolute tolerance of `1e-9`; samples whose
/// reference norm falls below `floor` times the peak reference norm are
/// skipped (the comparison would be 0/0 noise there).
pub fn trajectory_max_relative_gap(probe: &Trajectory, reference: &Trajectory, floor: f64) -> f64 {
    trajectory_gap_details(probe, reference, floor).0
}

/// [`trajectory_max_relative_gap`] plus the number of compared samples, so a
/// caller can tell an agreeing pair from one with no common times at all.
pub fn trajectory_gap_details(
    probe: &Trajectory,
    reference: &Trajectory,
    floor: f64,
) -> (f64, usize) {
    let peak = reference.norms().iter().copied().fold(0.0, f64::max);
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    let mut ref_idx = 0usize;
    for (t, state) in probe.times().iter().zip(probe.states()) {
        while ref_idx < reference.times().len() && reference.times()[ref_idx] < t - 1e-9 {
            ref_idx += 1;
        }
        if ref_idx >= reference.times().len() {
            break;
        }
        if (reference.times()[ref_idx] - t).abs() > 1e-9 {
            continue;
        }
        let ref_state = &reference.states()[ref_idx];
        let ref_norm = reference.norms()[ref_idx];
        if ref_norm < floor * peak {
            continue;
        }
        let len = state.len().min(ref_state.len());
        let diff = (0..len).map(|i| state.coefficients()[i] - ref_state.coefficients()[i]);
        worst = worst.max(vector_q_norm(diff, 2.0) / ref_norm);
        compared += 1;
    }
    (worst, compared)
}

/// Scalar input signal on `[0, t1]` used by the admissibility probe.
///
/// All variants have closed-form convolutions against `exp(lambda (t1 - s))`,
/// so stiff modes are evaluated exactly.
#[derive(Debug, Clone)]
pub enum ProbeSignal {
    /// Constant signal.
    Constant,
    /// Indicator of `(t1 - width, t1]`: the worst-case late concentration.
    LateBump { width: f64 },
    /// Truncated Fourier series `offset + sum_k a_k cos(2 pi k s / t1) + b_k sin(...)`.
    Fourier { offset: f64, cosine: Vec<f64>, sine: Vec<f64> },
}

impl ProbeSignal {
    fn label(&self) -> String {
        match self {
            ProbeSignal::Constant => "constant".into(),
            ProbeSignal::LateBump { width } => format!("late-bump({width:.2e})"),
            ProbeSignal::Fourier { cosine, .. } => format!("fourier(deg {})", cosine.len()),
        }
    }

    /// Unit-L^p scaling factor, by closed form or quadrature.
    fn lp_scale(&self, p: f64, t1: f64) -> f64 {
        match self {
            ProbeSignal::Constant => t1.powf(-1.0 / p),
            ProbeSignal::LateBump { width } => width.powf(-1.0 / p),
            ProbeSignal::Fourier { .. } => {
                let m = 4096;
                let h = t1 / m as f64;
                let w = simpson_weights(m, h);
                let norm_p: f64 = w
                    .iter()
                    .enumerate()
                    .map(|(i, wi)| wi * self.value(i as f64 * h, t1).abs().powf(p))
                    .sum();
                let norm = norm_p.powf(1.0 / p);
                if norm < 1e-12 {
                    0.0
                } else {
                    1.0 / norm
                }
            }
        }
    }

    fn value(&self, s: f64, t1: f64) -> f64 {
        match self {
            ProbeSignal::Constant => 1.0,
            ProbeSignal::LateBump { width } => {
                if s > t1 - width {
                    1.0
                } else {
                    0.0
                }
            }
            ProbeSignal::Fourier { offset, cosine, sine } => {
                let base = 2.0 * std::f64::consts::PI / t1;
                let mut v = *offset;
                for (k, a) in cosine.iter().enumerate() {
                    v += a * (base * (k + 1) as f64 * s).cos();
                }
                for (k, b) in sine.iter().enumerate() {
                    v += b * (base * (k + 1) as f64 * s).sin();
                }
                v
            }
        }
    }

    /// `integral_0^t1 exp(lambda (t1 - s)) w(s) ds` for the unscaled signal.
    fn convolve(&self, lambda: f64, t1: f64) -> f64 {
        match self {
            ProbeSignal::Constant => exp_moments(lambda, t1).0,
            ProbeSignal::LateBump { width } => exp_moments(lambda, *width).0,
            ProbeSignal::Fourier { offset, cosine, sine } => {
                let decay = 1.0 - (lambda * t1).exp();
                let base = 2.0 * std::f64::consts::PI / t1;
                let mut v = offset * exp_moments(lambda, t1).0;
                for (k, a) in cosine.iter().enumerate() {
                    let omega = base * (k + 1) as f64;
                    v += a * decay * (-lambda) / (omega * omega + lambda * lambda);
                }
                for (k, b) in sine.iter().enumerate() {
                    let omega = base * (k + 1) as f64;
                    v += b * decay * (-omega) / (omega * omega + lambda * lambda);
                }
                v
            }
        }
    }
}

/// Outcome of one probe signal along the truncation ladder.
#[derive(Debug, Clone)]
pub struct SignalOutcome {
    pub label: String,
    pub ladder_norms: Vec<f64>,
    /// Relative growth of the truncated norm between the two largest ladder
    /// orders.
    pub tail_growth: f64,
    pub pass: bool,
}

/// Aggregated admissibility evidence; heuristic, never a certificate.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub ladder: Vec<usize>,
    pub p: f64,
    pub t1: f64,
    pub outcomes: Vec<SignalOutcome>,
    pub pass: bool,
}

/// Relative tail growth above which a direction is flagged.
pub const ADMISSIBILITY_GROWTH_THRESHOLD: f64 = 1e-2;

/// Drive a coefficient direction with unit-L^p signals and record the
/// truncated l^q norms of `integral_0^t1 T(t1-s) d w(s) ds` along the ladder.
///
/// The signal family contains the constant signal, two late-concentrated
/// bumps (`t1/100` and `t1/1000` wide; the adversarial shapes for
/// admissibility) and `trials` random truncated Fourier series. A direction
/// passes when every signal's norm sequence has settled: relative growth
/// between the two largest ladder orders below
/// [`ADMISSIBILITY_GROWTH_THRESHOLD`].
pub fn admissibility_probe(
    gen: &DiagonalGenerator,
    d: &ExtrapolationVector,
    p: f64,
    t1: f64,
    trials: usize,
    ladder: &[usize],
    seed: u64,
) -> Result<AdmissibilityReport> {
    if !(p >= 1.0) {
        return Err(Error::domain(format!("signal exponent p must be >= 1, got {p}")));
    }
    if !(t1 > 0.0) {
        return Err(Error::domain(format!("horizon t1 must be positive, got {t1}")));
    }
    if trials < 10 {
        return Err(Error::domain(format!("probe needs at least 10 trials, got {trials}")));
    }
    if ladder.len() < 2 {
        return Err(Error::domain("ladder needs at least two truncation orders"));
    }
    if ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("ladder must be strictly increasing"));
    }
    let max_n = *ladder.last().unwrap();
    if max_n > gen.truncation() || d.len() != gen.truncation() {
        return Err(Error::dimension(format!(
            "ladder top {max_n} exceeds the generator truncation {}",
            gen.truncation()
        )));
    }

    let mut signals = vec![
        ProbeSignal::Constant,
        ProbeSignal::LateBump { width: t1 / 100.0 },
        ProbeSignal::LateBump { width: t1 / 1000.0 },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let degree = 8;
        let offset = rng.random_range(-1.0..1.0);
        let cosine: Vec<f64> =
            (0..degree).map(|k| rng.random_range(-1.0..1.0) / (k + 1) as f64).collect();
        let sine: Vec<f64> =
            (0..degree).map(|k| rng.random_range(-1.0..1.0) / (k + 1) as f64).collect();
        signals.push(ProbeSignal::Fourier { offset, cosine, sine });
    }

    let q = gen.exponent();
    let mut outcomes = Vec::with_capacity(signals.len());
    let mut all_pass = true;
    for signal in &signals {
        let scale = signal.lp_scale(p, t1);
        let modes: Vec<f64> = gen
            .eigenvalues()
            .iter()
            .zip(d.coefficients())
            .map(|(l, dn)| dn * scale * signal.convolve(*l, t1))
            .collect();
        let ladder_norms: Vec<f64> = ladder
            .iter()
            .map(|n| vector_q_norm(modes[..*n].iter().copied(), q))
            .collect();
        let prev = ladder_norms[ladder_norms.len() - 2];
        let last = ladder_norms[ladder_norms.len() - 1];
        let tail_growth = if prev == 0.0 {
            if last == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (last - prev) / prev
        };
        let pass = tail_growth <= ADMISSIBILITY_GROWTH_THRESHOLD;
        all_pass &= pass;
        outcomes.push(SignalOutcome { label: signal.label(), ladder_norms, tail_growth, pass });
    }
    Ok(AdmissibilityReport { ladder: ladder.to_vec(), p, t1, outcomes, pass: all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampled::simulate;
    use approx::assert_relative_eq;

    #[test]
    fn heat_coefficients_match_hand_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert_eq!(heat_eigenvalues(3), vec![0.0, -pi2, -4.0 * pi2]);
        let s = 2.0f64.sqrt();
        assert_eq!(heat_control_coefficients(3), vec![1.0, -s, s]);
        assert_eq!(heat_perturbation_coefficients(3), vec![-1.0, -s, -s]);
    }

    #[test]
    fn heat_system_rejects_tiny_truncation() {
        assert!(build_heat_system(&HeatSystemSpec::new(1)).is_err());
        assert!(build_heat_system(&HeatSystemSpec::new(2)).is_ok());
    }

    #[test]
    fn eta_mean_is_minus_one() {
        // <eta, f_0> = -1 exactly; check the quadrature against it.
        let m = 4096;
        let h = 1.0 / m as f64;
        let w = simpson_weights(m, h);
        let mean: f64 =
            w.iter().enumerate().map(|(i, wi)| wi * boundary_profile(i as f64 * h)).sum();
        assert_relative_eq!(mean, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn eta_residual_small_and_detector_sane() {
        let residual = eta_consistency_check(16, 4096).unwrap();
        assert!(residual <= 1e-8, "residual {residual}");

        let mut defective = heat_perturbation_coefficients(16);
        defective[0] += 0.1;
        let bad = eta_consistency_residual(&defective, 4096).unwrap();
        assert!(bad >= 0.099, "defect residual {bad}");
    }

    #[test]
    fn eta_residual_second_order_in_quadrature() {
        // Halving (or better) until the 1e-12 floor.
        let mut points = 512;
        let mut last = eta_consistency_check(8, points).unwrap();
        for _ in 0..4 {
            points *= 2;
            let next = eta_consistency_check(8, points).unwrap();
            if last <= 1e-12 {
                break;
            }
            assert!(next <= last / 2.0 + 1e-12, "{next} vs {last} at {points} points");
            last = next;
        }
    }

    #[test]
    fn diagonal_gate_accepts_and_rejects() {
        let ok = DiagonalSystemSpec::new(1.0, 1.0, 0.0, 2.0, 8);
        assert_relative_eq!(ok.admissibility_exponent(), 2.0, epsilon = 1e-15);
        let sys = build_diagonal_system(&ok).unwrap();
        assert_relative_eq!(sys.admissibility_exponent().unwrap(), 2.0, epsilon = 1e-15);

        let bad = DiagonalSystemSpec::new(1.0, 1.0, 0.0, 1.5, 8);
        match build_diagonal_system(&bad) {
            Err(Error::Admissibility { required, .. }) => {
                assert_relative_eq!(required, 2.0, epsilon = 1e-15)
            }
            other => panic!("expected admissibility error, got {other:?}"),
        }
    }

    #[test]
    fn diagonal_family_reproduces_heat_eigenvalues() {
        let spec = DiagonalSystemSpec::new(std::f64::consts::PI.powi(2), 2.0, 0.0, 2.0, 12);
        let sys = build_diagonal_system(&spec).unwrap();
        let heat = build_heat_system(&HeatSystemSpec::new(12)).unwrap();
        for (a, b) in sys
            .generator()
            .eigenvalues()
            .iter()
            .zip(heat.generator().eigenvalues())
        {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn fd_conserves_uniform_profile() {
        let mut spec = HeatSystemSpec::new(4);
        spec.feedback = vec![0.0];
        spec.boundary = vec![0.0];
        let grid = FdGrid::new(41, 1e-3, FdScheme::Trapezoidal).unwrap();
        let z0 = vec![1.0; 41];
        let traj = fd_simulate(&spec, &grid, &z0, 2).unwrap();
        for state in traj.states() {
            assert_relative_eq!(state.coefficients()[0], 1.0, epsilon = 1e-12);
            for c in &state.coefficients()[1..] {
                assert!(c.abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn fd_decays_eigenfunction_at_known_rate() {
        let mut spec = HeatSystemSpec::new(4);
        spec.feedback = vec![0.0];
        spec.boundary = vec![0.0];
        spec.tau = 0.02;
        let g = 201;
        let grid = FdGrid::new(g, 2e-5, FdScheme::Trapezoidal).unwrap();
        let dx = 1.0 / (g - 1) as f64;
        let z0: Vec<f64> =
            (0..g).map(|i| (std::f64::consts::PI * i as f64 * dx).cos()).collect();
        let traj = fd_simulate(&spec, &grid, &z0, 1).unwrap();
        let last = traj.states().last().unwrap();
        let expect = (-std::f64::consts::PI.powi(2) * 0.02).exp() / 2.0f64.sqrt();
        assert_relative_eq!(last.coefficients()[1], expect, max_relative = 2e-5);
    }

    #[test]
    fn fd_eigenfunction_error_shrinks_at_second_order() {
        let run = |g: usize| -> f64 {
            let mut spec = HeatSystemSpec::new(3);
            spec.feedback = vec![0.0];
            spec.boundary = vec![0.0];
            spec.tau = 0.02;
            let dx = 1.0 / (g - 1) as f64;
            let grid = FdGrid::new(g, 0.1 * dx * 0.02, FdScheme::Trapezoidal).unwrap();
            let z0: Vec<f64> =
                (0..g).map(|i| (std::f64::consts::PI * i as f64 * dx).cos()).collect();
            let traj = fd_simulate(&spec, &grid, &z0, 1).unwrap();
            let expect = (-std::f64::consts::PI.powi(2) * 0.02).exp() / 2.0f64.sqrt();
            (traj.states().last().unwrap().coefficients()[1] - expect).abs()
        };
        // Odd point counts keep the projection on pure composite Simpson.
        let errors: Vec<f64> = [27, 51, 101, 201].iter().map(|g| run(*g)).collect();
        let slope = {
            // Log-log least squares against the grid spacing.
            let xs: Vec<f64> = [26.0f64, 50.0, 100.0, 200.0].iter().map(|g| (1.0 / g).ln()).collect();
            let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
            let n = xs.len() as f64;
            let sx: f64 = xs.iter().sum();
            let sy: f64 = ys.iter().sum();
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
            (n * sxy - sx * sy) / (n * sxx - sx * sx)
        };
        assert!((slope - 2.0).abs() <= 0.3, "convergence slope {slope}, errors {errors:?}");
    }

    #[test]
    fn fd_cross_validates_spectral_model() {
        // Stabilized and perturbed; small version of the main comparison.
        let mut spec = HeatSystemSpec::new(16);
        spec.scale = 0.05;
        let sys = build_heat_system(&spec).unwrap();
        let substeps = 10usize;
        let g = 201;
        let grid = FdGrid::new(g, spec.tau / 250.0, FdScheme::Trapezoidal).unwrap();
        let dx = 1.0 / (g - 1) as f64;
        let z0: Vec<f64> = (0..g)
            .map(|i| 1.0 + (std::f64::consts::PI * i as f64 * dx).cos())
            .collect();
        // Project the initial profile for the spectral run.
        let x0 = sys.generator().state(project_profile(&z0, 16)).unwrap();
        let spectral = simulate(&sys, &x0, 3, substeps).unwrap();
        let fd = fd_simulate(&spec, &grid, &z0, 3).unwrap();
        let gap = trajectory_max_relative_gap(&spectral, &fd, 1e-6);
        assert!(gap <= 1e-3, "fd vs spectral relative gap {gap}");
    }

    #[test]
    fn probe_zero_direction_is_all_zero() {
        let gen = DiagonalGenerator::new(heat_eigenvalues(64), 2.0).unwrap();
        let d = ExtrapolationVector::bounded(vec![0.0; 64]).unwrap();
        let rep = admissibility_probe(&gen, &d, 2.0, 0.1, 10, &[16, 32, 64], 5).unwrap();
        assert!(rep.pass);
        for outcome in &rep.outcomes {
            assert!(outcome.ladder_norms.iter().all(|n| *n == 0.0));
        }
    }

    #[test]
    fn probe_passes_heat_direction_and_flags_linear_growth() {
        let n = 256;
        let gen = DiagonalGenerator::new(heat_eigenvalues(n), 2.0).unwrap();
        let ladder = [32, 64, 128, 256];

        let d = ExtrapolationVector::bounded(heat_perturbation_coefficients(n)).unwrap();
        let rep = admissibility_probe(&gen, &d, 2.0, 0.1, 10, &ladder, 5).unwrap();
        assert!(rep.pass, "heat direction should pass: {:?}", rep.outcomes);

        // Oracle: extending the ladder to 512 must not change the verdict,
        // i.e. the truncated norms really have settled.
        let n2 = 512;
        let gen2 = DiagonalGenerator::new(heat_eigenvalues(n2), 2.0).unwrap();
        let d2 = ExtrapolationVector::bounded(heat_perturbation_coefficients(n2)).unwrap();
        let rep2 =
            admissibility_probe(&gen2, &d2, 2.0, 0.1, 10, &[64, 128, 256, 512], 5).unwrap();
        assert!(rep2.pass, "heat direction should still pass at the 512 ladder");

        let bad = ExtrapolationVector::bounded_with_limit(
            (0..n).map(|k| k as f64).collect(),
            n as f64,
        )
        .unwrap();
        let rep = admissibility_probe(&gen, &bad, 2.0, 0.1, 10, &ladder, 5).unwrap();
        assert!(!rep.pass, "linear-growth direction should be flagged");
    }

    #[test]
    fn probe_oracle_linear_defect_mode_sums() {
        // Explicit mode values for w = 1: d_n (exp(lambda_n t1) - 1)/lambda_n.
        let n = 64;
        let gen = DiagonalGenerator::new(heat_eigenvalues(n), 2.0).unwrap();
        let t1 = 0.1;
        let signal = ProbeSignal::Constant;
        for lambda in gen.eigenvalues().iter().skip(1) {
            let expect = ((lambda * t1).exp() - 1.0) / lambda;
            assert_relative_eq!(signal.convolve(*lambda, t1), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn probe_requires_enough_trials() {
        let gen = DiagonalGenerator::new(heat_eigenvalues(8), 2.0).unwrap();
        let d = ExtrapolationVector::bounded(heat_perturbation_coefficients(8)).unwrap();
        assert!(admissibility_probe(&gen, &d, 2.0, 0.1, 5, &[4, 8], 5).is_err());
    }
}
