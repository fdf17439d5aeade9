//! Bayesian engine for three-outcome (win/draw/loss) football match forecasting.
//!
//! A latent Gaussian match variable with symmetric cut-offs `±δ` turns a
//! team-strength difference plus home effect into a probability triple.
//! Strengths carry hierarchical Gaussian priors whose means are anchored on
//! standardized external club ratings; posterior inference is adaptive
//! Metropolis-within-Gibbs. On top of the fitted posterior the crate provides
//! posterior-predictive forecasts, Brier and accuracy scoring under
//! phase-aware information cutoffs, a strength rating list, next-season prior
//! chaining, and fusion of subjective expert match opinions.

pub mod adjust;
pub mod dataset;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod expert;
pub mod forecast;
pub mod model;
pub mod normal;
pub mod sampler;
pub mod stats;
pub mod summary;

pub use error::{Error, Result};
