//! Exponent gate for the power-law diagonal family and the numerical
//! admissibility probe: drive a direction with unit-L^p signals and watch the
//! truncated norms settle (or not) along a ladder of truncation orders.
//!
//! ```bash
//! cargo run --example admissibility_probe
//! ```

use sdstab::heat::{
    admissibility_probe, build_diagonal_system, heat_eigenvalues,
    heat_perturbation_coefficients, DiagonalSystemSpec,
};
use sdstab::spectral::{DiagonalGenerator, ExtrapolationVector};

fn main() -> sdstab::Result<()> {
    // Exponent gate: q >= (gamma + 1)/gamma, p = gamma q / (gamma q - 1).
    for &(gamma, q) in &[(1.0, 2.0), (1.0, 1.5), (2.0, 2.0), (0.5, 3.5)] {
        let spec = DiagonalSystemSpec::new(1.0, gamma, 0.0, q, 8);
        match build_diagonal_system(&spec) {
            Ok(sys) => println!(
                "gamma={gamma}, q={q}: accepted, p = {:.4}",
                sys.admissibility_exponent().unwrap()
            ),
            Err(err) => println!("gamma={gamma}, q={q}: rejected ({err})"),
        }
    }

    // Probe the rod's boundary direction and a fabricated linear-growth one.
    let n = 256;
    let gen = DiagonalGenerator::new(heat_eigenvalues(n), 2.0)?;
    let ladder = [32, 64, 128, 256];

    for (label, d) in [
        ("rod boundary direction", ExtrapolationVector::bounded(heat_perturbation_coefficients(n))?),
        (
            "linear-growth direction",
            ExtrapolationVector::bounded_with_limit((0..n).map(|k| k as f64).collect(), n as f64)?,
        ),
    ] {
        let rep = admissibility_probe(&gen, &d, 2.0, 0.1, 10, &ladder, 0)?;
        println!("\n{label}: overall pass = {}", rep.pass);
        for outcome in rep.outcomes.iter().take(4) {
            println!(
                "  {:<18} ladder norms {:?}  tail growth {:.2e}  pass {}",
                outcome.label,
                outcome
                    .ladder_norms
                    .iter()
                    .map(|x| format!("{x:.4}"))
                    .collect::<Vec<_>>(),
                outcome.tail_growth,
                outcome.pass
            );
        }
    }
    println!("\n(evidence only: the probe is a numerical indicator, not a certificate)");
    Ok(())
}
