//! Design and evaluation of optimal Byzantine noise-injection attacks against
//! binary Gaussian hypothesis testing.
//!
//! A fraction `alpha` of sensor reports is replaced by Gaussian-perturbed
//! versions, so the fusion center receives two-component Gaussian mixtures
//! under either hypothesis. The attacker picks injection means `(nu0, nu1)`,
//! injection variances `(gamma0, gamma1)` and the attacking power `alpha` to
//! minimize the Kullback-Leibler divergence between the received mixtures,
//! subject to an injection energy budget `delta`. Smaller divergence means a
//! larger missed-detection probability for the Neyman-Pearson detector.
//!
//! The crate is organized around that pipeline:
//!
//! - [`distributions`]: scalar Gaussians, two-component mixtures, closed-form
//!   Gaussian KL divergence and reproducible sampling.
//! - [`divergence`]: the three mixture-KL approximations (Monte Carlo, chain
//!   rule upper bound, moment-matching Gaussian approximation) plus a
//!   composite-Simpson quadrature oracle.
//! - [`inner`]: the exact convex solver for the injection variances at fixed
//!   `(nu0, nu1, alpha)`, via a change of variables and partial minimization.
//! - [`descent`]: derivative-free coordinate descent over `(nu0, nu1, alpha)`
//!   and the attacking-power sweep.
//! - [`detection`]: Neyman-Pearson likelihood-ratio detection simulation with
//!   and without attack.
//! - [`validation`]: randomized cross-check batteries pairing each solver
//!   with an independent oracle.

pub mod descent;
pub mod detection;
pub mod distributions;
pub mod divergence;
mod error;
pub mod inner;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod validation;

pub use descent::{alpha_sweep, coordinate_descent, OptimizationTrace, SolverConfig};
pub use detection::{calibrate_threshold, simulate_error_probs, DetectorSpec, ErrorEstimate};
pub use distributions::{Gaussian, GaussianMixture};
pub use divergence::{
    kl_gaussian_approx, kl_monte_carlo, kl_quadrature_oracle, kl_upper_bound, AttackScenario,
};
pub use error::Error;
pub use inner::{solve_inner, InnerSolution, OuterPoint};
pub use model::NominalModel;
pub use quadrature::GridSpec;
pub use rng::SampleStream;

pub type Result<T> = std::result::Result<T, Error>;
