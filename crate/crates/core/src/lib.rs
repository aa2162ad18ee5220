//! Metropolis MCMC toolkit for logistic-model posteriors.
//!
//! Three kernels over any [`target::TargetDensity`] (random-walk, guided,
//! and guided-adaptive) plus chain diagnostics (autocorrelation, effective
//! sample size, Monte Carlo standard error, posterior summaries) and
//! case-control estimands (odds ratio, incidence-calibrated risk difference,
//! closed-form MLE with stratified bootstrap).

pub mod diagnostics;
pub mod error;
pub mod estimands;
pub mod sampler;
pub mod target;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
