//! Sampled-data feedback loops for diagonal semigroups with unbounded
//! rank-one control and boundary-type perturbations.
//!
//! The state space is a truncated l^q coefficient space, the generator is
//! diagonal, the control operator and the perturbation direction live in the
//! extrapolation space (boundary delta functions and their relatives), and
//! the feedback runs through a zero-order hold with sampling period `tau`.
//! The crate builds the perturbed semigroup along two independent routes
//! (dense matrix exponential and the variation-of-constants fixed point),
//! forms the hold operators and the one-period closed-loop map, simulates the
//! exact sampled recursion, and estimates how large the perturbation scale
//! can get before the loop loses its decay rate.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! examples/
//! ├── semigroup_basics.rs      # generators, semigroups, resolvents, norms
//! ├── perturbed_semigroup.rs   # matrix exponential vs Volterra fixed point
//! ├── hold_operators.rs        # S(t), S_D(t) and their smoothed forms
//! ├── closed_loop_simulation.rs# exact recursion, decay fit, CSV export
//! ├── stability_radius.rs      # margin search over the perturbation scale
//! ├── convergence_study.rs     # T_c -> T and S_c -> S as c -> 0
//! ├── heat_rod_demo.rs         # spectral model vs finite-difference oracle
//! └── admissibility_probe.rs   # exponent gate and input-element probe
//! ```
//!
//! ```bash
//! cargo run --example semigroup_basics
//! cargo run --example stability_radius
//! ```
//!
//! A thin CLI (`sdstab`) drives the same library from scenario files; see the
//! `simulate`, `analyze`, `radius`, `sweep`, `validate` and `heat-demo`
//! subcommands.
//!
//! # Quick start
//!
//! ```
//! use sdstab::heat::{build_heat_system, HeatSystemSpec};
//! use sdstab::sampled::{closed_loop, simulate};
//! use sdstab::stability::power_stability;
//!
//! let mut spec = HeatSystemSpec::new(32);
//! spec.scale = 0.05; // perturbation scale c
//! let sys = build_heat_system(&spec).unwrap();
//! let delta = closed_loop(&sys).unwrap();
//! let report = power_stability(&delta, sys.omega(), sys.tau()).unwrap();
//! assert!(report.verdict);
//!
//! let x0 = sys.generator().state(vec![1.0; 32]).unwrap();
//! let trajectory = simulate(&sys, &x0, 20, 10).unwrap();
//! assert!(trajectory.norms().last().unwrap() < &1.0);
//! ```

// `!(x > 0.0)` guards reject NaN along with the out-of-range values; the
// clippy rewrite `x <= 0.0` would silently accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod heat;
pub mod linalg;
pub mod perturbation;
pub mod sampled;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
