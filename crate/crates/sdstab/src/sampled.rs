//! Sampled-data feedback loop: hold operators, closed-loop map, simulation.
//!
//! The control operator is a single extrapolation-space column `b` (scalar
//! input space), the feedback is a bounded functional `F`, and the loop runs
//! a zero-order hold: on `[k tau, (k+1) tau)` the input is frozen at
//! `F x(k tau)`. The hold operator
//! `S(t) u = integral_0^t T(s) B u ds` has a closed form per mode; its
//! perturbed counterpart `S_D` is produced by the augmented-matrix
//! exponential trick. Both also have resolvent-smoothed representations that
//! serve as independent cross-checks, and the exact solution recursion
//! `x(k tau + t) = T_D(t) x(k tau) + S_D(t) F x(k tau)` drives [`simulate`].

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{expm, expm_integral_column, vector_q_norm};
use crate::perturbation::{
    build_perturbed_matrix, perturbed_semigroup_expm, RankOnePerturbation, TruncatedOperator,
};
use crate::spectral::{DiagonalGenerator, DualFunctional, ExtrapolationVector, StateVector};

/// Norm threshold treated as numerical blow-up during simulation.
pub const OVERFLOW_NORM: f64 = 1e12;

/// Scalar-input control operator given by its coefficient column.
#[derive(Debug, Clone)]
pub struct ControlOperator {
    column: ExtrapolationVector,
}

impl ControlOperator {
    pub fn new(column: ExtrapolationVector) -> Self {
        Self { column }
    }

    pub fn column(&self) -> &ExtrapolationVector {
        &self.column
    }

    pub fn len(&self) -> usize {
        self.column.len()
    }

    pub fn is_empty(&self) -> bool {
        self.column.is_empty()
    }
}

/// Complete sampled-data loop: generator, control column, feedback
/// functional, rank-one perturbation, sampling period and target decay rate.
#[derive(Debug, Clone)]
pub struct SampledSystem {
    gen: DiagonalGenerator,
    control: ControlOperator,
    feedback: DualFunctional,
    perturbation: RankOnePerturbation,
    tau: f64,
    omega: f64,
    /// Admissibility exponent `p = gamma q / (gamma q - 1)` when the system
    /// came from a power-law diagonal family.
    admissibility_p: Option<f64>,
}

impl SampledSystem {
    pub fn new(
        gen: DiagonalGenerator,
        control: ControlOperator,
        feedback: DualFunctional,
        perturbation: RankOnePerturbation,
        tau: f64,
        omega: f64,
    ) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::domain(format!("sampling period tau must be positive, got {tau}")));
        }
        if !(omega >= 0.0) {
            return Err(Error::domain(format!("decay rate omega must be nonnegative, got {omega}")));
        }
        let n = gen.truncation();
        for (len, what) in [
            (control.len(), "control column"),
            (feedback.len(), "feedback functional"),
            (perturbation.direction().len(), "perturbation direction"),
            (perturbation.functional().len(), "perturbation functional"),
        ] {
            if len != n {
                return Err(Error::dimension(format!(
                    "{what} has length {len}, generator truncation is {n}"
                )));
            }
        }
        Ok(Self { gen, control, feedback, perturbation, tau, omega, admissibility_p: None })
    }

    pub fn generator(&self) -> &DiagonalGenerator {
        &self.gen
    }

    pub fn control(&self) -> &ControlOperator {
        &self.control
    }

    pub fn feedback(&self) -> &DualFunctional {
        &self.feedback
    }

    pub fn perturbation(&self) -> &RankOnePerturbation {
        &self.perturbation
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn admissibility_exponent(&self) -> Option<f64> {
        self.admissibility_p
    }

    pub(crate) fn set_admissibility_exponent(&mut self, p: f64) {
        self.admissibility_p = Some(p);
    }

    /// Same loop with the perturbation rescaled to `c`.
    pub fn with_scale(&self, c: f64) -> Result<Self> {
        let mut sys = self.clone();
        sys.perturbation = self.perturbation.with_scale(c)?;
        Ok(sys)
    }

    /// Same loop with the perturbation switched off.
    pub fn nominal(&self) -> Self {
        self.with_scale(0.0).expect("scale 0 is always valid")
    }

    /// Same loop with a different feedback functional.
    pub fn with_feedback(&self, feedback: DualFunctional) -> Result<Self> {
        if feedback.len() != self.gen.truncation() {
            return Err(Error::dimension(format!(
                "feedback functional has length {}, generator truncation is {}",
                feedback.len(),
                self.gen.truncation()
            )));
        }
        let mut sys = self.clone();
        sys.feedback = feedback;
        Ok(sys)
    }

    /// Same loop with a different perturbation.
    pub fn with_perturbation(&self, perturbation: RankOnePerturbation) -> Result<Self> {
        if perturbation.direction().len() != self.gen.truncation() {
            return Err(Error::dimension(format!(
                "perturbation has length {}, generator truncation is {}",
                perturbation.direction().len(),
                self.gen.truncation()
            )));
        }
        let mut sys = self.clone();
        sys.perturbation = perturbation;
        Ok(sys)
    }
}

/// `(exp(lambda t) - 1) / lambda` with the short series for small
/// `|lambda t|`, covering `lambda = 0` without cancellation.
fn phi1(lambda: f64, t: f64) -> f64 {
    let x = lambda * t;
    if x.abs() < 1e-8 {
        t * (1.0 + x / 2.0 + x * x / 6.0)
    } else {
        (x.exp() - 1.0) / lambda
    }
}

/// Closed-form hold column `S(t)` applied to a unit input:
/// `s_n(t) = b_n (exp(lambda_n t) - 1) / lambda_n`.
pub fn hold_nominal(sys: &SampledSystem, t: f64) -> Result<StateVector> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("hold time must be nonnegative, got {t}")));
    }
    let gen = sys.generator();
    let coeffs = gen
        .eigenvalues()
        .iter()
        .zip(sys.control.column().coefficients())
        .map(|(l, b)| b * phi1(*l, t))
        .collect();
    Ok(StateVector::from_parts(coeffs, gen.id()))
}

/// Resolvent-smoothed representation of the nominal hold column:
/// `S(t)u = (I - T(t)) R(lambda) B u + lambda integral_0^t T(s) R(lambda) B u ds`.
///
/// Must agree with [`hold_nominal`]; the time integral of the smoothed column
/// is again closed-form per mode.
pub fn hold_nominal_via_resolvent(sys: &SampledSystem, t: f64, lambda: f64) -> Result<StateVector> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("hold time must be nonnegative, got {t}")));
    }
    let gen = sys.generator();
    if !(lambda > gen.spectral_bound()) {
        return Err(Error::ResolventDomain { lambda, spectral_bound: gen.spectral_bound() });
    }
    let coeffs = gen
        .eigenvalues()
        .iter()
        .zip(sys.control.column().coefficients())
        .map(|(l, b)| {
            let smoothed = b / (lambda - l);
            (1.0 - (l * t).exp()) * smoothed + lambda * smoothed * phi1(*l, t)
        })
        .collect();
    Ok(StateVector::from_parts(coeffs, gen.id()))
}

/// Perturbed hold column `S_D(t)` for a unit input, via the augmented-matrix
/// exponential; reduces bit-for-bit to [`hold_nominal`] when the perturbation
/// vanishes.
pub fn hold_perturbed(sys: &SampledSystem, t: f64) -> Result<StateVector> {
    if sys.perturbation.is_zero() {
        return hold_nominal(sys, t);
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("hold time must be nonnegative, got {t}")));
    }
    let gen = sys.generator();
    let a_d = build_perturbed_matrix(gen, &sys.perturbation)?;
    let b = DVector::from_column_slice(sys.control.column().coefficients());
    let col = expm_integral_column(a_d.entries(), &b, t);
    Ok(StateVector::from_parts(col.as_slice().to_vec(), gen.id()))
}

/// Resolvent-smoothed representation of the perturbed hold column.
///
/// `lambda` should come from a contraction check (`alpha(lambda) < 1`); the
/// linear solve fails if it hits the truncated spectrum.
pub fn hold_perturbed_via_resolvent(
    sys: &SampledSystem,
    t: f64,
    lambda: f64,
) -> Result<StateVector> {
    if sys.perturbation.is_zero() {
        return hold_nominal_via_resolvent(sys, t, lambda);
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("hold time must be nonnegative, got {t}")));
    }
    let gen = sys.generator();
    if !(lambda > gen.spectral_bound()) {
        return Err(Error::ResolventDomain { lambda, spectral_bound: gen.spectral_bound() });
    }
    let n = gen.truncation();
    let a_d = build_perturbed_matrix(gen, &sys.perturbation)?;
    let shifted = DMatrix::identity(n, n) * lambda - a_d.entries();
    let b = DVector::from_column_slice(sys.control.column().coefficients());
    let smoothed = shifted
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular("perturbed resolvent solve".into()))?;
    let t_d = perturbed_semigroup_expm(&a_d, t)?;
    let term1 = &smoothed - t_d.entries() * &smoothed;
    let term2 = expm_integral_column(a_d.entries(), &smoothed, t) * lambda;
    let col = term1 + term2;
    Ok(StateVector::from_parts(col.as_slice().to_vec(), gen.id()))
}

/// One-period closed-loop operator `Delta_D(tau) = T_D(tau) + S_D(tau) F`.
pub fn closed_loop(sys: &SampledSystem) -> Result<TruncatedOperator> {
    let gen = sys.generator();
    let n = gen.truncation();
    let tau = sys.tau;
    let mut entries = if sys.perturbation.is_zero() {
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (gen.eigenvalues()[i] * tau).exp()
            } else {
                0.0
            }
        })
    } else {
        let a_d = build_perturbed_matrix(gen, &sys.perturbation)?;
        expm(&(a_d.entries() * tau))
    };
    let hold = hold_perturbed(sys, tau)?;
    let f = sys.feedback.coefficients();
    for i in 0..n {
        for j in 0..n {
            entries[(i, j)] += hold.coefficients()[i] * f[j];
        }
    }
    TruncatedOperator::new(entries, gen)
}

/// Sampled trajectory with per-sample norms and an overflow flag.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVector>,
    norms: Vec<f64>,
    tau: f64,
    substeps: usize,
    /// Index of the period at which the norm crossed [`OVERFLOW_NORM`], if any.
    overflow_at: Option<usize>,
}

impl Trajectory {
    /// Crate-internal assembly for trajectories produced by other front ends
    /// (the finite-difference oracle).
    pub(crate) fn from_parts(
        times: Vec<f64>,
        states: Vec<StateVector>,
        norms: Vec<f64>,
        tau: f64,
        substeps: usize,
    ) -> Self {
        Self { times, states, norms, tau, substeps, overflow_at: None }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn overflow_at(&self) -> Option<usize> {
        self.overflow_at
    }

    /// Number of completed sampling periods.
    pub fn periods(&self) -> usize {
        (self.times.len() - 1) / self.substeps
    }

    /// Norms at the period boundaries `k tau`, starting with `k = 0`.
    pub fn boundary_norms(&self) -> Vec<f64> {
        self.norms.iter().step_by(self.substeps).copied().collect()
    }

    /// States at the period boundaries.
    pub fn boundary_states(&self) -> Vec<&StateVector> {
        self.states.iter().step_by(self.substeps).collect()
    }

    /// CSV export: `time,norm,coeff_0..coeff_{min(N,16)-1}`.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        let shown = self.states.first().map_or(0, |s| s.len().min(16));
        write!(out, "time,norm")?;
        for i in 0..shown {
            write!(out, ",coeff_{i}")?;
        }
        writeln!(out)?;
        for ((t, norm), state) in self.times.iter().zip(&self.norms).zip(&self.states) {
            write!(out, "{t},{norm}")?;
            for c in &state.coefficients()[..shown] {
                write!(out, ",{c}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Plain-text sidecar with all coefficients, one sample per line.
    pub fn write_full_states(&self, out: &mut impl Write) -> std::io::Result<()> {
        let width = self.states.first().map_or(0, |s| s.len());
        writeln!(out, "# time coeff_0 .. coeff_{}", width.saturating_sub(1))?;
        for (t, state) in self.times.iter().zip(&self.states) {
            write!(out, "{t}")?;
            for c in state.coefficients() {
                write!(out, " {c}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Run the exact sampled-data recursion for `periods` periods, sampling
/// `substeps` times per period.
///
/// Marching stops early (with the offending period recorded) once the state
/// norm exceeds [`OVERFLOW_NORM`].
pub fn simulate(
    sys: &SampledSystem,
    x0: &StateVector,
    periods: usize,
    substeps: usize,
) -> Result<Trajectory> {
    if periods < 1 || substeps < 1 {
        return Err(Error::domain("periods and substeps must be at least 1"));
    }
    let gen = sys.generator();
    if x0.generator() != gen.id() {
        return Err(Error::dimension("initial state is bound to a different generator"));
    }
    let n = gen.truncation();
    let q = gen.exponent();
    let delta = sys.tau / substeps as f64;

    // Substep transition matrices and hold columns, shared by every period.
    let mut transitions: Vec<DMatrix<f64>> = Vec::with_capacity(substeps);
    let mut holds: Vec<DVector<f64>> = Vec::with_capacity(substeps);
    if sys.perturbation.is_zero() {
        for j in 1..=substeps {
            let t = j as f64 * delta;
            transitions.push(DMatrix::from_fn(n, n, |r, c| {
                if r == c {
                    (gen.eigenvalues()[r] * t).exp()
                } else {
                    0.0
                }
            }));
            holds.push(DVector::from_column_slice(hold_nominal(sys, t)?.coefficients()));
        }
    } else {
        let a_d = build_perturbed_matrix(gen, &sys.perturbation)?;
        let b = DVector::from_column_slice(sys.control.column().coefficients());
        let mut aug = DMatrix::zeros(n + 1, n + 1);
        aug.view_mut((0, 0), (n, n)).copy_from(&(a_d.entries() * delta));
        aug.view_mut((0, n), (n, 1)).copy_from(&(&b * delta));
        let step = expm(&aug);
        let mut power = step.clone();
        for _ in 1..=substeps {
            transitions.push(power.view((0, 0), (n, n)).into_owned());
            holds.push(power.view((0, n), (n, 1)).column(0).into_owned());
            power = &step * power;
        }
    }

    let mut times = Vec::with_capacity(periods * substeps + 1);
    let mut states = Vec::with_capacity(periods * substeps + 1);
    let mut norms = Vec::with_capacity(periods * substeps + 1);
    let push = |times: &mut Vec<f64>,
                states: &mut Vec<StateVector>,
                norms: &mut Vec<f64>,
                t: f64,
                v: &DVector<f64>| {
        times.push(t);
        norms.push(vector_q_norm(v.iter().copied(), q));
        states.push(StateVector::from_parts(v.as_slice().to_vec(), gen.id()));
    };

    let mut boundary = DVector::from_column_slice(x0.coefficients());
    push(&mut times, &mut states, &mut norms, 0.0, &boundary);
    let mut overflow_at = None;

    'outer: for k in 0..periods {
        let u: f64 = sys
            .feedback
            .coefficients()
            .iter()
            .zip(boundary.iter())
            .map(|(f, x)| f * x)
            .sum();
        let mut next_boundary = boundary.clone();
        for j in 1..=substeps {
            let state = &transitions[j - 1] * &boundary + &holds[j - 1] * u;
            let t = k as f64 * sys.tau + j as f64 * delta;
            push(&mut times, &mut states, &mut norms, t, &state);
            if *norms.last().unwrap() > OVERFLOW_NORM {
                overflow_at = Some(k);
                break 'outer;
            }
            if j == substeps {
                next_boundary = state;
            }
        }
        boundary = next_boundary;
    }

    Ok(Trajectory { times, states, norms, tau: sys.tau, substeps, overflow_at })
}
