//! One-dimensional Fokker-Planck laboratory.
//!
//! Drift fields have the separable form `b(t, x) = -V'(x) + epsilon h(t)`.
//! The crate computes the unperturbed stationary density, the first-order
//! correction `kappa` with `p ~ p_hat (1 + epsilon kappa)`, and the full
//! time-dependent density, and provides the tooling to check the
//! approximation orders against each other, against Monte Carlo paths and
//! against the closed-form Ornstein-Uhlenbeck solution.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic_ou;
pub mod approx;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod hjb;
pub mod io;
pub mod montecarlo;
pub mod problem;
pub mod stationary;
mod tridiag;

pub use analytic_ou::{ou_delta_order, ou_exact_density, ou_moments, z1, DeltaOrder, OUOracle};
pub use approx::{
    approx_residual, assemble, error_report, fit_slope, scaling_study, ErrorReport, ScalingResult,
};
pub use error::{Error, Result};
pub use evolution::{
    discrete_stationary, pde_residual, solve_fpe, solve_kappa, Advection, PdeKind, SchemeConfig,
    Trajectory,
};
pub use grid::{differentiate, integrate, norms, Derivative, Field, Grid1D, Norms};
pub use hjb::{hamiltonian, hjb_residual, to_hj_potential, HamiltonianEval};
pub use montecarlo::{
    empirical_density, mc_vs_pde, simulate, InitialCondition, MCConfig, SampleSet,
};
pub use problem::{PerturbationSpec, PotentialSpec, ProblemSpec, ValidationReport};
pub use stationary::{log_derivative_check, stationary_density, stationary_residual, Stationary};
