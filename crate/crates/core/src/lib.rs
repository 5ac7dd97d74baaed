//! Bayesian sample size determination for two-group experiments that borrow
//! strength from several historical sources.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! * [`distributions`]: probability kernels, quantiles and adaptive quadrature.
//! * [`commensurate`]: the per-source predictive t mixture and its normal approximation.
//! * [`collective`]: source weights and the collective normal prior.
//! * [`posterior`]: conjugate and variance-marginalized posteriors for the mean difference.
//! * [`ssd`]: ACC / ALC / APVC sample-size solvers.
//! * [`montecarlo`]: a seeded simulation oracle for all three criteria.

pub mod collective;
pub mod commensurate;
pub mod distributions;
pub mod error;
pub mod montecarlo;
pub mod posterior;
pub mod ssd;

pub use error::{Error, Result};
