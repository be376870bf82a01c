//! Hold operators of the zero-order-hold loop and their resolvent-smoothed
//! representations, plus the cocycle identity.
//!
//! ```bash
//! cargo run --example hold_operators
//! ```

use sdstab::heat::{build_heat_system, HeatSystemSpec};
use sdstab::linalg::vector_q_norm;
use sdstab::perturbation::{build_perturbed_matrix, lambda_star_search, perturbed_semigroup_expm};
use sdstab::sampled::{
    hold_nominal, hold_nominal_via_resolvent, hold_perturbed, hold_perturbed_via_resolvent,
};

fn main() -> sdstab::Result<()> {
    let mut spec = HeatSystemSpec::new(16);
    spec.scale = 0.1;
    let sys = build_heat_system(&spec)?;
    let tau = sys.tau();
    let lambda = lambda_star_search(sys.generator(), sys.perturbation())?;

    println!("t        ||S(t)||      gap closed/resolvent   gap S_D routes");
    for j in [1usize, 4, 8, 16, 32] {
        let t = tau * j as f64 / 32.0;
        let s = hold_nominal(&sys, t)?;
        let s_res = hold_nominal_via_resolvent(&sys, t, 1.0)?;
        let sd = hold_perturbed(&sys, t)?;
        let sd_res = hold_perturbed_via_resolvent(&sys, t, lambda)?;
        let gap_nominal = s
            .coefficients()
            .iter()
            .zip(s_res.coefficients())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let gap_perturbed = sd
            .coefficients()
            .iter()
            .zip(sd_res.coefficients())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "{t:<8.5} {:<12.6e} {gap_nominal:<22.3e} {gap_perturbed:.3e}",
            vector_q_norm(s.coefficients().iter().copied(), 2.0)
        );
    }

    // Cocycle: S_D(t2) - S_D(t1) = T_D(t1) S_D(t2 - t1).
    let (t1, t2) = (0.02, 0.05);
    let a_d = build_perturbed_matrix(sys.generator(), sys.perturbation())?;
    let forwarded = perturbed_semigroup_expm(&a_d, t1)?.apply(&hold_perturbed(&sys, t2 - t1)?)?;
    let defect = hold_perturbed(&sys, t2)?
        .coefficients()
        .iter()
        .zip(hold_perturbed(&sys, t1)?.coefficients())
        .zip(forwarded.coefficients())
        .map(|((a, b), c)| (a - b - c).abs())
        .fold(0.0, f64::max);
    println!("cocycle defect at (t1, t2) = ({t1}, {t2}): {defect:.3e}");
    Ok(())
}
