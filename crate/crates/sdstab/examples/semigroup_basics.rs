//! Diagonal generators, semigroups, resolvents and the two norms.
//!
//! ```bash
//! cargo run --example semigroup_basics
//! ```

use sdstab::heat::{heat_eigenvalues, heat_perturbation_coefficients};
use sdstab::spectral::{
    resolvent_apply, semigroup_apply, semigroup_extended_apply, state_norm, xminus1_norm,
    DiagonalGenerator, ExtrapolationVector,
};

fn main() -> sdstab::Result<()> {
    // The heated-rod generator truncated at 8 modes, on l^2.
    let gen = DiagonalGenerator::new(heat_eigenvalues(8), 2.0)?;
    println!("spectral bound: {}", gen.spectral_bound());

    // A state and its decay under the semigroup.
    let x = gen.state(vec![1.0; 8])?;
    for &t in &[0.0, 0.01, 0.05, 0.2] {
        let xt = semigroup_apply(&gen, t, &x)?;
        println!("||T({t:>4}) x||_2 = {:.6}", state_norm(&xt, 2.0));
    }

    // The boundary perturbation direction lives in the extrapolation space:
    // it has no l^2 limit as the truncation grows, but its resolvent image does.
    let d = ExtrapolationVector::bounded(heat_perturbation_coefficients(8))?;
    let lambda = gen.default_resolvent_shift();
    let smoothed = resolvent_apply(&gen, lambda, &d)?;
    println!(
        "||d||_2 on the truncation = {:.4}, ||(lambda - A)^-1 d||_2 = {:.4}",
        state_norm(&gen.state(d.coefficients().to_vec())?, 2.0),
        state_norm(&smoothed, 2.0),
    );
    println!("extrapolation norm ||d||_-1 = {:.6}", xminus1_norm(&d, &gen, lambda)?);

    // The extended semigroup damps the direction componentwise.
    let dt = semigroup_extended_apply(&gen, 0.05, &d)?;
    println!("first coefficients of T(0.05) d: {:?}", &dt.coefficients()[..3]);
    Ok(())
}
