//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Length or generator-binding mismatch between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Argument outside its mathematical domain (negative time, bad exponent, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Resolvent parameter not strictly to the right of the spectrum.
    #[error("resolvent parameter {lambda} is not above the spectral bound {spectral_bound}")]
    ResolventDomain { lambda: f64, spectral_bound: f64 },

    /// Non-finite value where a finite one is required.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// The exponent condition q >= (gamma+1)/gamma failed for a diagonal system.
    #[error("admissibility condition violated: q = {q} but q >= (gamma+1)/gamma = {required} is required for gamma = {gamma}")]
    Admissibility { q: f64, gamma: f64, required: f64 },

    /// The fixed-point iteration for the perturbed semigroup did not contract.
    #[error("Volterra iteration did not converge within {iterations} sweeps (last residual {residual:.3e})")]
    VolterraDivergence { iterations: usize, residual: f64 },

    /// Doubling search for the resolvent threshold ran past its cap.
    #[error("threshold search exceeded the cap {cap:.3e} without reaching a contraction")]
    SearchCap { cap: f64 },

    /// The unperturbed closed loop already violates the decay-rate hypothesis.
    #[error("nominal system is not exponentially stable at the requested rate (spectral radius {spectral_radius})")]
    NominalUnstable { spectral_radius: f64 },

    /// Eigenvalue computation failed to converge.
    #[error("eigenvalue solver failed on a {side}x{side} matrix")]
    Eigen { side: usize },

    /// A linear solve hit a (numerically) singular matrix.
    #[error("singular linear system in {0}")]
    Singular(String),

    /// Decay-rate fit preconditions not met.
    #[error("decay fit unavailable: {0}")]
    FitUnavailable(String),

    /// The finite-difference oracle blew up while the spectral model stayed bounded.
    #[error("finite-difference oracle diverged at step {step} (norm {norm:.3e})")]
    OracleDivergence { step: usize, norm: f64 },

    /// Scenario file problems; every offending key is listed.
    #[error("invalid configuration:\n{}", issues.join("\n"))]
    Config { issues: Vec<String> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
