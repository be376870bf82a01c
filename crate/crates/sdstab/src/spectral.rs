//! Diagonal generators on truncated l^q coefficient spaces.
//!
//! A [`DiagonalGenerator`] holds the first `N` eigenvalues of a diagonal
//! operator `A` together with the sequence-space exponent `q`. Everything the
//! rest of the crate does — semigroups, resolvents, hold operators, closed
//! loops — is expressed through the componentwise primitives defined here:
//!
//! * the semigroup `T(t) x = (exp(lambda_n t) x_n)_n`,
//! * its extension to extrapolation-class coefficient vectors,
//! * the smoothing resolvent `(lambda I - A)^{-1} w = (w_n / (lambda - lambda_n))_n`,
//! * the state norm `||x||_q` and the extrapolation norm
//!   `||w||_{-1} = ||(lambda I - A)^{-1} w||_q`.
//!
//! Coefficient vectors that stand for genuinely unbounded directions (boundary
//! delta functions and their relatives) are kept in a separate type,
//! [`ExtrapolationVector`], so the type system tracks which objects live in
//! the state space and which only make sense after resolvent smoothing.
//!
//! Eigenvalues are real throughout; both worked systems are real-diagonal and
//! complex spectra are out of scope. Eigenvalue lists need not be sorted or
//! distinct.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::linalg::vector_q_norm;

/// Default bound checked against `sup_n |w_n|` for bounded-sequence
/// extrapolation vectors.
pub const DEFAULT_SUP_BOUND: f64 = 10.0;

static NEXT_GENERATOR_ID: AtomicU64 = AtomicU64::new(1);

/// Identity of a generator instance; state vectors carry it so that
/// coefficient data cannot silently cross between different truncations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GeneratorId(u64);

/// Truncated diagonal generator: eigenvalues, truncation order and exponent.
#[derive(Debug, Clone)]
pub struct DiagonalGenerator {
    eigenvalues: Vec<f64>,
    q: f64,
    spectral_bound: f64,
    id: GeneratorId,
}

impl DiagonalGenerator {
    /// Build a generator from its leading eigenvalues.
    ///
    /// Eigenvalues need not be sorted or distinct. Requires `N >= 1`,
    /// `q > 1` and finite entries.
    pub fn new(eigenvalues: Vec<f64>, q: f64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::domain("truncation order must be at least 1"));
        }
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::domain(format!("exponent q must lie in (1, inf), got {q}")));
        }
        if eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("generator eigenvalues".into()));
        }
        let spectral_bound = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            eigenvalues,
            q,
            spectral_bound,
            id: GeneratorId(NEXT_GENERATOR_ID.fetch_add(1, Ordering::Relaxed)),
        })
    }

    pub fn truncation(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn exponent(&self) -> f64 {
        self.q
    }

    /// Dual exponent q' = q / (q - 1).
    pub fn dual_exponent(&self) -> f64 {
        self.q / (self.q - 1.0)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Cached `max_n lambda_n`.
    pub fn spectral_bound(&self) -> f64 {
        self.spectral_bound
    }

    pub fn id(&self) -> GeneratorId {
        self.id
    }

    /// Default resolvent parameter: one unit to the right of the spectrum.
    pub fn default_resolvent_shift(&self) -> f64 {
        self.spectral_bound + 1.0
    }

    /// Bind a coefficient vector to this generator as a state.
    pub fn state(&self, coefficients: Vec<f64>) -> Result<StateVector> {
        if coefficients.len() != self.truncation() {
            return Err(Error::dimension(format!(
                "state has {} coefficients, generator truncation is {}",
                coefficients.len(),
                self.truncation()
            )));
        }
        if coefficients.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("state coefficients".into()));
        }
        Ok(StateVector { coefficients, generator: self.id })
    }

    fn check_state(&self, x: &StateVector) -> Result<()> {
        if x.generator != self.id {
            return Err(Error::dimension(
                "state vector is bound to a different generator".to_string(),
            ));
        }
        Ok(())
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.truncation() {
            return Err(Error::dimension(format!(
                "{what} has length {len}, generator truncation is {}",
                self.truncation()
            )));
        }
        Ok(())
    }
}

/// State-space element bound to one generator.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    coefficients: Vec<f64>,
    generator: GeneratorId,
}

impl StateVector {
    /// Crate-internal constructor for vectors produced by operators whose
    /// generator binding was already verified.
    pub(crate) fn from_parts(coefficients: Vec<f64>, generator: GeneratorId) -> Self {
        Self { coefficients, generator }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn generator(&self) -> GeneratorId {
        self.generator
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// Declared tail behaviour of the untruncated coefficient sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientClass {
    /// Asserted to lie in l^infinity only: a genuine extrapolation-space
    /// direction such as a boundary delta function.
    BoundedSequence,
    /// Already an element of the state space l^q.
    StateSpace,
}

/// Coefficient representation of an extrapolation-space element.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationVector {
    coefficients: Vec<f64>,
    class: CoefficientClass,
}

impl ExtrapolationVector {
    /// A bounded-sequence direction; the truncated coefficients must respect
    /// the sup bound [`DEFAULT_SUP_BOUND`].
    pub fn bounded(coefficients: Vec<f64>) -> Result<Self> {
        Self::bounded_with_limit(coefficients, DEFAULT_SUP_BOUND)
    }

    /// Same as [`ExtrapolationVector::bounded`] with an explicit sup bound.
    pub fn bounded_with_limit(coefficients: Vec<f64>, limit: f64) -> Result<Self> {
        if coefficients.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("extrapolation coefficients".into()));
        }
        let sup = coefficients.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if sup > limit {
            return Err(Error::domain(format!(
                "bounded-sequence coefficients exceed the sup bound: {sup} > {limit}"
            )));
        }
        Ok(Self { coefficients, class: CoefficientClass::BoundedSequence })
    }

    /// A direction already known to lie in the state space.
    pub fn state_class(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("extrapolation coefficients".into()));
        }
        Ok(Self { coefficients, class: CoefficientClass::StateSpace })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn class(&self) -> CoefficientClass {
        self.class
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Keep only the first `n` coefficients.
    pub fn truncate(&self, n: usize) -> Self {
        Self { coefficients: self.coefficients[..n.min(self.len())].to_vec(), class: self.class }
    }
}

/// Bounded functional on the state space, represented by the coefficients of
/// the pairing `<h, x> = sum_n h_n x_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFunctional {
    coefficients: Vec<f64>,
    dual_exponent: f64,
}

impl DualFunctional {
    /// Build a functional for a state space with exponent `q`; the truncated
    /// dual norm `||h||_{q'}` must be finite.
    pub fn new(coefficients: Vec<f64>, q: f64) -> Result<Self> {
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::domain(format!("exponent q must lie in (1, inf), got {q}")));
        }
        if coefficients.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("functional coefficients".into()));
        }
        let dual_exponent = q / (q - 1.0);
        let norm = vector_q_norm(coefficients.iter().copied(), dual_exponent);
        if !norm.is_finite() {
            return Err(Error::NonFinite("functional dual norm".into()));
        }
        Ok(Self { coefficients, dual_exponent })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn dual_exponent(&self) -> f64 {
        self.dual_exponent
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `||h||_{q'}` on the truncation.
    pub fn dual_norm(&self) -> f64 {
        vector_q_norm(self.coefficients.iter().copied(), self.dual_exponent)
    }

    /// Pairing with raw coefficients.
    pub fn pair_slice(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().zip(x).map(|(h, x)| h * x).sum()
    }

    /// Pairing `<h, x>` with a state vector.
    pub fn pair(&self, x: &StateVector) -> Result<f64> {
        if x.len() != self.len() {
            return Err(Error::dimension(format!(
                "functional length {} does not match state length {}",
                self.len(),
                x.len()
            )));
        }
        Ok(self.pair_slice(x.coefficients()))
    }
}

/// `T(t) x`, computed componentwise; `t = 0` returns `x` unchanged.
pub fn semigroup_apply(gen: &DiagonalGenerator, t: f64, x: &StateVector) -> Result<StateVector> {
    gen.check_state(x)?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("semigroup time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(x.clone());
    }
    let coefficients = gen
        .eigenvalues
        .iter()
        .zip(x.coefficients())
        .map(|(l, xn)| (l * t).exp() * xn)
        .collect();
    Ok(StateVector { coefficients, generator: gen.id })
}

/// The extended semigroup applied to an extrapolation vector; the declared
/// class is preserved.
pub fn semigroup_extended_apply(
    gen: &DiagonalGenerator,
    t: f64,
    w: &ExtrapolationVector,
) -> Result<ExtrapolationVector> {
    gen.check_len(w.len(), "extrapolation vector")?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("semigroup time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(w.clone());
    }
    let coefficients = gen
        .eigenvalues
        .iter()
        .zip(w.coefficients())
        .map(|(l, wn)| (l * t).exp() * wn)
        .collect();
    Ok(ExtrapolationVector { coefficients, class: w.class })
}

/// Resolvent smoothing `(lambda I - A)^{-1} w`, landing in the state space.
///
/// Requires `lambda` strictly above the spectral bound so that the shift can
/// never hit an eigenvalue of the truncation.
pub fn resolvent_apply(
    gen: &DiagonalGenerator,
    lambda: f64,
    w: &ExtrapolationVector,
) -> Result<StateVector> {
    gen.check_len(w.len(), "extrapolation vector")?;
    if !(lambda > gen.spectral_bound) {
        return Err(Error::ResolventDomain { lambda, spectral_bound: gen.spectral_bound });
    }
    let coefficients = gen
        .eigenvalues
        .iter()
        .zip(w.coefficients())
        .map(|(l, wn)| wn / (lambda - l))
        .collect();
    Ok(StateVector { coefficients, generator: gen.id })
}

/// `||x||_q = (sum |x_n|^q)^(1/q)`.
pub fn state_norm(x: &StateVector, q: f64) -> f64 {
    vector_q_norm(x.coefficients().iter().copied(), q)
}

/// Extrapolation norm `||(lambda I - A)^{-1} w||_q`.
pub fn xminus1_norm(w: &ExtrapolationVector, gen: &DiagonalGenerator, lambda: f64) -> Result<f64> {
    let smoothed = resolvent_apply(gen, lambda, w)?;
    Ok(state_norm(&smoothed, gen.q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn heat_eigenvalues(n: usize) -> Vec<f64> {
        (0..n).map(|k| -((k * k) as f64) * std::f64::consts::PI.powi(2)).collect()
    }

    fn heat_gen(n: usize) -> DiagonalGenerator {
        DiagonalGenerator::new(heat_eigenvalues(n), 2.0).unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(DiagonalGenerator::new(vec![], 2.0).is_err());
        assert!(DiagonalGenerator::new(vec![0.0], 1.0).is_err());
        assert!(DiagonalGenerator::new(vec![f64::NAN], 2.0).is_err());
        assert!(ExtrapolationVector::bounded(vec![11.0]).is_err());
        assert!(ExtrapolationVector::bounded_with_limit(vec![11.0], 20.0).is_ok());
    }

    #[test]
    fn spectral_bound_handles_unsorted_and_repeated_eigenvalues() {
        let gen = DiagonalGenerator::new(vec![-3.0, -0.5, -7.0, -0.5], 2.0).unwrap();
        assert_eq!(gen.spectral_bound(), -0.5);
        assert_eq!(gen.default_resolvent_shift(), 0.5);
    }

    #[test]
    fn semigroup_identity_at_zero() {
        let gen = heat_gen(4);
        let x = gen.state(vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        let y = semigroup_apply(&gen, 0.0, &x).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn semigroup_scalar_exponential() {
        let gen = DiagonalGenerator::new(vec![-1.0], 2.0).unwrap();
        let x = gen.state(vec![1.0]).unwrap();
        let y = semigroup_apply(&gen, 1.0, &x).unwrap();
        assert_relative_eq!(y.coefficients()[0], 0.36787944117144233, epsilon = 1e-15);
    }

    #[test]
    fn semigroup_heat_modes() {
        let gen = heat_gen(2);
        let x = gen.state(vec![1.0, 1.0]).unwrap();
        let y = semigroup_apply(&gen, 0.1, &x).unwrap();
        assert_eq!(y.coefficients()[0], 1.0);
        assert_relative_eq!(
            y.coefficients()[1],
            (-0.1 * std::f64::consts::PI.powi(2)).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn semigroup_rejects_foreign_state_and_negative_time() {
        let gen_a = heat_gen(2);
        let gen_b = heat_gen(2);
        let x = gen_a.state(vec![1.0, 1.0]).unwrap();
        assert!(semigroup_apply(&gen_b, 0.1, &x).is_err());
        assert!(semigroup_apply(&gen_a, -0.1, &x).is_err());
    }

    #[test]
    fn extended_semigroup_on_heat_perturbation_direction() {
        let gen = heat_gen(3);
        let s = 2.0f64.sqrt();
        let d = ExtrapolationVector::bounded(vec![-1.0, -s, -s]).unwrap();
        let w = semigroup_extended_apply(&gen, 0.1, &d).unwrap();
        let decay = (-0.1 * std::f64::consts::PI.powi(2)).exp();
        assert_eq!(w.coefficients()[0], -1.0);
        assert_relative_eq!(w.coefficients()[1], -s * decay, epsilon = 1e-15);
        assert_eq!(w.class(), CoefficientClass::BoundedSequence);
    }

    #[test]
    fn extended_semigroup_scalar() {
        let gen = DiagonalGenerator::new(vec![-2.0], 2.0).unwrap();
        let w = ExtrapolationVector::bounded(vec![3.0]).unwrap();
        let out = semigroup_extended_apply(&gen, 2.0f64.ln(), &w).unwrap();
        assert_relative_eq!(out.coefficients()[0], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn resolvent_componentwise_division() {
        let gen = DiagonalGenerator::new(vec![0.0], 2.0).unwrap();
        let w = ExtrapolationVector::bounded(vec![-1.0]).unwrap();
        let x = resolvent_apply(&gen, 1.0, &w).unwrap();
        assert_eq!(x.coefficients(), &[-1.0]);

        let gen = DiagonalGenerator::new(vec![-2.0], 2.0).unwrap();
        let w = ExtrapolationVector::bounded(vec![4.0]).unwrap();
        let x = resolvent_apply(&gen, 2.0, &w).unwrap();
        assert_eq!(x.coefficients(), &[1.0]);
    }

    #[test]
    fn resolvent_on_heat_direction() {
        let gen = heat_gen(2);
        let s = 2.0f64.sqrt();
        let d = ExtrapolationVector::bounded(vec![-1.0, -s]).unwrap();
        let x = resolvent_apply(&gen, 1.0, &d).unwrap();
        assert_relative_eq!(x.coefficients()[0], -1.0, epsilon = 1e-15);
        assert_relative_eq!(
            x.coefficients()[1],
            -s / (1.0 + std::f64::consts::PI.powi(2)),
            epsilon = 1e-15
        );
    }

    #[test]
    fn resolvent_rejects_lambda_in_spectrum_closure() {
        let gen = heat_gen(2);
        let d = ExtrapolationVector::bounded(vec![1.0, 1.0]).unwrap();
        assert!(resolvent_apply(&gen, 0.0, &d).is_err());
        assert!(resolvent_apply(&gen, -5.0, &d).is_err());
    }

    #[test]
    fn norms_match_hand_values() {
        let gen = DiagonalGenerator::new(vec![0.0, 0.0], 2.0).unwrap();
        let x = gen.state(vec![3.0, 4.0]).unwrap();
        assert_relative_eq!(state_norm(&x, 2.0), 5.0, epsilon = 1e-14);

        let gen1 = DiagonalGenerator::new(vec![0.0], 2.0).unwrap();
        let w = ExtrapolationVector::bounded(vec![2.0]).unwrap();
        assert_relative_eq!(xminus1_norm(&w, &gen1, 1.0).unwrap(), 2.0, epsilon = 1e-14);

        let gen4 = DiagonalGenerator::new(vec![0.0, 0.0], 4.0).unwrap();
        let x = gen4.state(vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(state_norm(&x, 4.0), 2.0f64.powf(0.25), epsilon = 1e-14);
    }

    #[test]
    fn semigroup_law_on_grid() {
        let gen = heat_gen(6);
        let x = gen.state(vec![1.0, -0.5, 2.0, 0.25, -1.5, 0.75]).unwrap();
        for &t in &[0.0, 0.01, 0.05, 0.2] {
            for &s in &[0.0, 0.03, 0.1] {
                let once = semigroup_apply(&gen, t + s, &x).unwrap();
                let twice =
                    semigroup_apply(&gen, t, &semigroup_apply(&gen, s, &x).unwrap()).unwrap();
                for (a, b) in once.coefficients().iter().zip(twice.coefficients()) {
                    assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
                }
            }
        }
    }

    #[test]
    fn resolvent_commutes_with_semigroup() {
        let gen = heat_gen(5);
        let w = ExtrapolationVector::bounded(vec![1.0, -1.4, 0.2, 0.9, -0.3]).unwrap();
        let lambda = 1.0;
        let t = 0.07;
        let a = semigroup_apply(&gen, t, &resolvent_apply(&gen, lambda, &w).unwrap()).unwrap();
        let b = resolvent_apply(&gen, lambda, &semigroup_extended_apply(&gen, t, &w).unwrap())
            .unwrap();
        for (x, y) in a.coefficients().iter().zip(b.coefficients()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn equivalent_norms_for_two_resolvent_shifts() {
        let gen = heat_gen(8);
        let (l1, l2) = (1.0, 7.5);
        // Componentwise multiplier from the l2-shift to the l1-shift bounds
        // the norm ratio for any q.
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for l in gen.eigenvalues() {
            let ratio = (l2 - l) / (l1 - l);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        let mut rng_state = 88172645463325252u64;
        let mut next = move || {
            // xorshift64; plenty for test data
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        for _ in 0..25 {
            let w =
                ExtrapolationVector::bounded((0..8).map(|_| next()).collect::<Vec<_>>()).unwrap();
            let n1 = xminus1_norm(&w, &gen, l1).unwrap();
            let n2 = xminus1_norm(&w, &gen, l2).unwrap();
            if n2 == 0.0 {
                continue;
            }
            let ratio = n1 / n2;
            assert!(ratio >= lo - 1e-12 && ratio <= hi + 1e-12, "ratio {ratio} not in [{lo}, {hi}]");
        }
    }

    proptest! {
        #[test]
        fn semigroup_law_holds_for_random_generators(
            eigen in proptest::collection::vec(-50.0f64..1.0, 1..10),
            coeffs in proptest::collection::vec(-5.0f64..5.0, 10),
            t in 0.0f64..2.0,
            s in 0.0f64..2.0,
        ) {
            let n = eigen.len();
            let gen = DiagonalGenerator::new(eigen, 2.0).unwrap();
            let x = gen.state(coeffs[..n].to_vec()).unwrap();
            let once = semigroup_apply(&gen, t + s, &x).unwrap();
            let twice =
                semigroup_apply(&gen, t, &semigroup_apply(&gen, s, &x).unwrap()).unwrap();
            for (a, b) in once.coefficients().iter().zip(twice.coefficients()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn norm_invariant_under_signs_and_permutations(
            coeffs in proptest::collection::vec(-100.0f64..100.0, 1..12),
            signs in proptest::collection::vec(proptest::bool::ANY, 12),
            rot in 0usize..12,
            q in 1.0001f64..8.0,
        ) {
            let gen = DiagonalGenerator::new(vec![0.0; coeffs.len()], 2.0).unwrap();
            let x = gen.state(coeffs.clone()).unwrap();
            let base = state_norm(&x, q);

            let flipped: Vec<f64> = coeffs
                .iter()
                .zip(signs.iter().cycle())
                .map(|(c, s)| if *s { -c } else { *c })
                .collect();
            let xf = gen.state(flipped).unwrap();
            prop_assert!((state_norm(&xf, q) - base).abs() <= 1e-12 * (1.0 + base));

            let mut rotated = coeffs.clone();
            rotated.rotate_left(rot % coeffs.len());
            let xr = gen.state(rotated).unwrap();
            prop_assert!((state_norm(&xr, q) - base).abs() <= 1e-12 * (1.0 + base));
        }
    }
}
