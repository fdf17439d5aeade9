//! Parameter state, cumulative-probit outcome probabilities, categorical
//! log-likelihood, and the hierarchical Gaussian log-prior.
//!
//! A match between home side i and away side j has latent mean
//! mu = s_i - s_j + h. With cut-off delta > 0 the home side wins when the
//! latent variable exceeds delta, loses below -delta, and draws inside the
//! band, giving p_win = 1 - Phi(delta - mu) and p_loss = Phi(-delta - mu).

use serde::{Deserialize, Serialize};

use crate::domain::{Outcome, RatingSystem, StandardizedRatings};
use crate::error::{Error, Result};
use crate::normal::{normal_cdf, normal_logpdf};

/// Full parameter vector theta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamState {
    /// Team strengths on the latent scale, aligned with the team list.
    pub s: Vec<f64>,
    /// Draw cut-off, strictly positive.
    pub delta: f64,
    /// Home advantage.
    pub h: f64,
    /// Rating-regression coefficient; absent under the zero system.
    pub beta: Option<f64>,
    /// Log of the strength-prior standard deviation.
    pub gamma_s: f64,
}

/// Gaussian prior as (mean, variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrior {
    pub mean: f64,
    pub var: f64,
}

impl GaussianPrior {
    pub fn new(mean: f64, var: f64) -> Self {
        GaussianPrior { mean, var }
    }

    pub fn sd(&self) -> f64 {
        self.var.sqrt()
    }

    fn check(&self, name: &str) -> Result<()> {
        if !self.mean.is_finite() || !self.var.is_finite() {
            return Err(Error::validation(format!("{name} prior must be finite")));
        }
        if self.var <= 0.0 {
            return Err(Error::validation(format!(
                "{name} prior variance {} must be positive",
                self.var
            )));
        }
        Ok(())
    }
}

/// Priors for the scalar parameters of one adjustment system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSet {
    pub system: RatingSystem,
    pub delta: GaussianPrior,
    pub h: GaussianPrior,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<GaussianPrior>,
    pub gamma: GaussianPrior,
}

impl PriorSet {
    /// Check finiteness, positive variances, and the beta/system pairing:
    /// beta is absent exactly under the zero system.
    pub fn validate(&self) -> Result<()> {
        self.delta.check("delta")?;
        self.h.check("h")?;
        self.gamma.check("gamma")?;
        match (&self.beta, self.system) {
            (Some(b), RatingSystem::Uefacr | RatingSystem::Fcwr) => b.check("beta"),
            (None, RatingSystem::Zero) => Ok(()),
            (Some(_), RatingSystem::Zero) => Err(Error::validation(
                "beta prior is meaningless under the zero system",
            )),
            (None, system) => Err(Error::validation(format!(
                "missing beta prior for the {system} system"
            ))),
        }
    }
}

/// Home-perspective probability triple (win, draw, loss).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbs {
    pub p_win: f64,
    pub p_draw: f64,
    pub p_loss: f64,
}

impl OutcomeProbs {
    pub fn as_array(&self) -> [f64; 3] {
        [self.p_win, self.p_draw, self.p_loss]
    }

    pub fn from_array(p: [f64; 3]) -> Self {
        OutcomeProbs { p_win: p[0], p_draw: p[1], p_loss: p[2] }
    }

    /// Probability of a coded outcome.
    pub fn prob(&self, outcome: Outcome) -> f64 {
        self.as_array()[outcome.index()]
    }
}

/// Probability triple for latent mean `mu` and cut-off `delta`.
/// The caller guarantees `delta > 0`.
#[inline]
pub fn probs_from_mu(mu: f64, delta: f64) -> [f64; 3] {
    let a = normal_cdf(delta - mu);
    let b = normal_cdf(-delta - mu);
    // a >= b in exact arithmetic; clamp shields against cancellation when
    // delta is vanishingly small.
    [1.0 - a, (a - b).max(0.0), b]
}

/// Latent mean for home side `home` against `away`.
#[inline]
pub fn latent_mean(theta: &ParamState, home: usize, away: usize) -> f64 {
    theta.s[home] - theta.s[away] + theta.h
}

/// Outcome probabilities for one match.
pub fn outcome_probs(theta: &ParamState, home: usize, away: usize) -> Result<OutcomeProbs> {
    if !(theta.delta > 0.0) || !theta.delta.is_finite() {
        return Err(Error::validation(format!(
            "cut-off delta must be positive and finite, got {}",
            theta.delta
        )));
    }
    debug_assert_ne!(home, away, "a team cannot play itself");
    let p = probs_from_mu(latent_mean(theta, home, away), theta.delta);
    Ok(OutcomeProbs::from_array(p))
}

/// A played match with sides resolved to positions in `ParamState::s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexedMatch {
    pub home: usize,
    pub away: usize,
    pub outcome: Outcome,
}

/// Categorical log-likelihood: sum of log probabilities of the observed
/// outcomes. Returns -inf when any observed outcome has zero probability.
pub fn log_likelihood(theta: &ParamState, matches: &[IndexedMatch]) -> f64 {
    matches
        .iter()
        .map(|m| {
            let p = probs_from_mu(latent_mean(theta, m.home, m.away), theta.delta);
            p[m.outcome.index()].ln()
        })
        .sum()
}

/// Hierarchical log-prior with normalizing constants.
///
/// Strengths are exchangeable around the rating regression:
/// s_i ~ N(beta * x_i, exp(2 gamma_s)) with x the standardized anchors,
/// and each scalar parameter carries its own Gaussian prior. delta <= 0 is
/// outside the support and returns -inf.
pub fn log_prior(theta: &ParamState, priors: &PriorSet, std: &StandardizedRatings) -> f64 {
    debug_assert_eq!(priors.system, std.system, "prior/anchor system mismatch");
    debug_assert_eq!(theta.s.len(), std.values.len(), "strength/anchor length mismatch");
    debug_assert_eq!(
        theta.beta.is_some(),
        priors.beta.is_some(),
        "beta state/prior mismatch"
    );
    if theta.delta <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let beta = theta.beta.unwrap_or(0.0);
    let s_var = (2.0 * theta.gamma_s).exp();
    let mut lp = 0.0;
    for (s_i, x_i) in theta.s.iter().zip(&std.values) {
        lp += normal_logpdf(*s_i, beta * x_i, s_var);
    }
    lp += normal_logpdf(theta.delta, priors.delta.mean, priors.delta.var);
    lp += normal_logpdf(theta.h, priors.h.mean, priors.h.var);
    if let (Some(b), Some(bp)) = (theta.beta, &priors.beta) {
        lp += normal_logpdf(b, bp.mean, bp.var);
    }
    lp += normal_logpdf(theta.gamma_s, priors.gamma.mean, priors.gamma.var);
    lp
}
