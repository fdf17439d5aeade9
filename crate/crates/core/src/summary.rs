//! Posterior summaries pooled across chains, and chaining of end-of-season
//! posteriors into next-season priors.

use serde::Serialize;

use crate::diagnostics::diagnostics;
use crate::domain::RatingSystem;
use crate::error::{Error, Result};
use crate::model::{GaussianPrior, PriorSet};
use crate::sampler::PosteriorDraws;
use crate::stats;

/// Moments, quantiles, and diagnostics of one scalar parameter.
#[derive(Debug, Clone, Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub median: f64,
    pub q975: f64,
    /// None when diagnostics are unavailable or undefined for this parameter.
    pub r_hat: Option<f64>,
    pub ess: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorSummary {
    pub system: RatingSystem,
    pub n_teams: usize,
    /// Total retained draws across chains.
    pub n_draws: usize,
    pub params: Vec<ParamSummary>,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Summarize pooled draws per parameter; quantiles use linear interpolation.
/// Diagnostics that cannot be computed leave r_hat/ess unset rather than
/// failing the summary.
pub fn summarize(draws: &PosteriorDraws) -> Result<PosteriorSummary> {
    if draws.n_retained() == 0 {
        return Err(Error::validation("cannot summarize an empty draw set"));
    }
    let diag = diagnostics(draws).ok();
    let finite = |x: f64| x.is_finite().then_some(x);
    let mut params = Vec::new();
    for name in draws.param_names() {
        let series = draws
            .chain_series(&name)
            .expect("param_names only yields extractable names");
        let mut pooled: Vec<f64> = series.iter().flatten().copied().collect();
        let mean = stats::mean(&pooled);
        let sd = stats::sd(&pooled);
        pooled.sort_by(|a, b| a.partial_cmp(b).expect("draws are finite"));
        let (r_hat, ess) = match diag.as_ref().and_then(|d| d.get(&name)) {
            Some(d) => (finite(d.r_hat), finite(d.ess)),
            None => (None, None),
        };
        params.push(ParamSummary {
            name,
            mean,
            sd,
            q025: stats::quantile_sorted(&pooled, 0.025),
            median: stats::quantile_sorted(&pooled, 0.5),
            q975: stats::quantile_sorted(&pooled, 0.975),
            r_hat,
            ess,
        });
    }
    Ok(PosteriorSummary {
        system: draws.system,
        n_teams: draws.n_teams,
        n_draws: draws.n_retained(),
        params,
    })
}

/// Turn an end-of-season summary into next-season priors: Gaussian with the
/// posterior mean and variance for delta, h, gamma, and (when anchored) beta.
/// Team strengths are not carried over; the next season re-anchors them on
/// fresh external ratings.
pub fn chain_priors(summary: &PosteriorSummary, system: RatingSystem) -> Result<PriorSet> {
    let take = |name: &str| -> Result<GaussianPrior> {
        let p = summary
            .get(name)
            .ok_or_else(|| Error::validation(format!("summary lacks parameter '{name}'")))?;
        if p.sd == 0.0 {
            return Err(Error::validation(format!(
                "posterior SD of '{name}' is zero; refusing a degenerate prior"
            )));
        }
        Ok(GaussianPrior::new(p.mean, p.sd * p.sd))
    };
    let beta = match system {
        RatingSystem::Zero => None,
        RatingSystem::Uefacr | RatingSystem::Fcwr => Some(take("beta")?),
    };
    let priors = PriorSet {
        system,
        delta: take("delta")?,
        h: take("h")?,
        beta,
        gamma: take("gamma")?,
    };
    priors.validate()?;
    Ok(priors)
}
