//! Kernel deconvolution density estimation when the measurement noise is
//! symmetric stable with characteristic function `exp(-|t|^λ/μ)`.
//!
//! The estimator uses the sinc kernel. Because its variance grows like
//! `exp((1/h)^λ/μ)`, every estimator quantity is carried in a scaled form
//! ([`ScaledValue`]). Alongside the estimator the crate provides the
//! closed-form asymptotics of the auxiliary variable `S` on `[0, 1]` with
//! density proportional to `exp((s/h)^λ/μ)`, the regime-dependent limit
//! variances, and a Monte Carlo harness that checks the normal limits.

pub mod asymptotics;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod io;
pub mod quadrature;
pub mod rng;
pub mod scaled;
pub mod stable;
pub mod target;
pub mod verify;
mod vh;

pub use error::{Error, Result};
pub use estimator::{
    estimate_at, estimate_grid_cf, expected_estimate, g_density, sample_observations, scaled_vh, Estimator,
    EstimatorConfig,
};
pub use scaled::ScaledValue;
pub use stable::{stable_cf, stable_density, stable_sample, Regime, StableParams};
pub use target::TargetDensity;
pub use vh::VhKernel;
