//! Expert opinion pooling: an opinion on a forthcoming match enters the
//! posterior as a weighted pseudo-likelihood term so that, with no data,
//! the fused forecast tilts from the model toward the expert as the weight
//! grows.

use serde::Serialize;

use crate::dataset::Dataset;
use crate::domain::StandardizedRatings;
use crate::error::{Error, Result};
use crate::forecast::{forecast_match, Forecast};
use crate::model::{OutcomeProbs, PriorSet};
use crate::sampler::{run_mcmc_terms, LikelihoodTerm, SamplerConfig};

/// One expert's probability triple for one forthcoming match.
#[derive(Debug, Clone, Serialize)]
pub struct ExpertOpinion {
    pub match_id: String,
    pub probs: OutcomeProbs,
    /// Pooling weight; larger defers more to the expert. Must be positive.
    pub weight: f64,
}

impl ExpertOpinion {
    /// Per-outcome exponents a_k = w * pi_k - 1 of the pooling term.
    pub fn coefficients(&self) -> Result<[f64; 3]> {
        if !(self.weight > 0.0) || !self.weight.is_finite() {
            return Err(Error::validation(format!(
                "opinion on '{}': weight must be positive and finite, got {}",
                self.match_id, self.weight
            )));
        }
        let p = self.probs.as_array();
        Ok([
            self.weight * p[0] - 1.0,
            self.weight * p[1] - 1.0,
            self.weight * p[2] - 1.0,
        ])
    }

    /// Soft diagnostics that do not block fusion.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Ok(a) = self.coefficients() {
            let labels = ["win", "draw", "loss"];
            for k in 0..3 {
                if a[k] <= -1.0 {
                    out.push(format!(
                        "opinion on '{}': expert probability for {} is 0; the pooled \
                         density is clamped where the model probability vanishes",
                        self.match_id, labels[k]
                    ));
                }
            }
        }
        out
    }
}

/// Log contribution of one opinion given the model's outcome probabilities:
/// sum_k a_k * ln p_k. Outcomes with a_k = 0 contribute nothing even at
/// p_k = 0; a vanishing probability with a live exponent clamps to -inf.
pub fn expert_log_term(opinion: &ExpertOpinion, match_probs: &OutcomeProbs) -> Result<f64> {
    let a = opinion.coefficients()?;
    let p = match_probs.as_array();
    let mut acc = 0.0;
    for k in 0..3 {
        if a[k] == 0.0 {
            continue;
        }
        if p[k] <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += a[k] * p[k].ln();
    }
    Ok(acc)
}

/// Forecast `target_ids` from a posterior that conditions on `train` results
/// and on every opinion naming a target. Returns the forecasts in target
/// order together with soft warnings (opinions that attached to nothing, or
/// to already-played matches).
///
/// Target outcomes never enter the fit, even when the dataset records them;
/// an opinion whose coefficients are all exactly zero is dropped before
/// sampling, so it leaves the random number stream untouched.
pub fn fuse_forecasts(
    ds: &Dataset,
    train: &[crate::model::IndexedMatch],
    target_ids: &[String],
    opinions: &[ExpertOpinion],
    priors: &PriorSet,
    std: &StandardizedRatings,
    config: &SamplerConfig,
) -> Result<(Vec<Forecast>, Vec<String>)> {
    let mut warnings = Vec::new();

    let mut targets = Vec::with_capacity(target_ids.len());
    for id in target_ids {
        let m = ds.match_by_id(id).ok_or_else(|| {
            Error::validation(format!("forecast target '{id}' is not in the dataset"))
        })?;
        targets.push(m);
    }

    let mut terms: Vec<LikelihoodTerm> =
        train.iter().map(LikelihoodTerm::observed).collect();
    for (i, op) in opinions.iter().enumerate() {
        let a = op.coefficients()?;
        warnings.extend(op.warnings());
        let Some(m) = ds.match_by_id(&op.match_id) else {
            warnings.push(format!(
                "opinion {} references unknown match '{}'; ignored",
                i + 1,
                op.match_id
            ));
            continue;
        };
        if !target_ids.contains(&op.match_id) {
            let why = if m.outcome.is_some() { "an already-played match" } else { "a non-target match" };
            warnings.push(format!(
                "opinion {} on '{}' names {}; ignored",
                i + 1,
                op.match_id,
                why
            ));
            continue;
        }
        if a == [0.0, 0.0, 0.0] {
            continue;
        }
        let (home, away) = ds.sides(m);
        terms.push(LikelihoodTerm { home, away, weights: a });
    }

    let draws = run_mcmc_terms(&terms, ds.n_teams(), priors, std, config)?;
    let mut forecasts = Vec::with_capacity(targets.len());
    for m in targets {
        let (home, away) = ds.sides(m);
        forecasts.push(forecast_match(&draws, &m.match_id, &m.home, &m.away, home, away)?);
    }
    Ok((forecasts, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjust::{Adjustment, ZeroAdjustment};
    use crate::domain::{MatchRecord, Outcome, Phase, Team};
    use chrono::NaiveDate;

    fn opinion(match_id: &str, p: [f64; 3], weight: f64) -> ExpertOpinion {
        ExpertOpinion {
            match_id: match_id.into(),
            probs: OutcomeProbs::from_array(p),
            weight,
        }
    }

    #[test]
    fn published_coefficients_are_exact() {
        let op = opinion("SF-2-BAY-RMA", [0.15, 0.25, 0.60], 200.0);
        assert_eq!(op.coefficients().unwrap(), [29.0, 49.0, 119.0]);
    }

    #[test]
    fn uniform_opinion_at_weight_three_vanishes() {
        let third = 1.0 / 3.0;
        let op = opinion("M", [third, third, third], 3.0);
        assert_eq!(op.coefficients().unwrap(), [0.0, 0.0, 0.0]);
        // And therefore contributes nothing even where a probability is 0.
        let probs = OutcomeProbs::from_array([0.0, 0.5, 0.5]);
        assert_eq!(expert_log_term(&op, &probs).unwrap(), 0.0);
    }

    #[test]
    fn nonpositive_weight_is_rejected() {
        for w in [0.0, -1.0, f64::NAN] {
            let op = opinion("M", [0.2, 0.3, 0.5], w);
            assert!(op.coefficients().is_err());
            let probs = OutcomeProbs::from_array([0.3, 0.3, 0.4]);
            assert!(expert_log_term(&op, &probs).is_err());
        }
    }

    #[test]
    fn vanishing_model_probability_clamps_to_neg_inf() {
        let op = opinion("M", [0.5, 0.3, 0.2], 10.0);
        let probs = OutcomeProbs::from_array([0.0, 0.5, 0.5]);
        assert_eq!(expert_log_term(&op, &probs).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn log_term_matches_direct_sum() {
        let op = opinion("M", [0.15, 0.25, 0.60], 20.0);
        let probs = OutcomeProbs::from_array([0.5, 0.3, 0.2]);
        let a = op.coefficients().unwrap();
        let direct = a[0] * 0.5f64.ln() + a[1] * 0.3f64.ln() + a[2] * 0.2f64.ln();
        assert!((expert_log_term(&op, &probs).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_opinion_warns() {
        let op = opinion("M", [0.0, 0.4, 0.6], 10.0);
        let w = op.warnings();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("win"));
        assert!(opinion("M", [0.2, 0.3, 0.5], 10.0).warnings().is_empty());
    }

    fn tiny_team(id: u32, abbrev: &str) -> Team {
        Team {
            team_id: id,
            name: format!("Team {abbrev}"),
            abbrev: abbrev.into(),
            country: "GER".into(),
            pot: 1,
            group: 'A',
            uefacr: 10.0,
            fcwr: 100.0,
        }
    }

    fn rec(
        id: &str,
        date: (i32, u32, u32),
        home: &str,
        away: &str,
        outcome: Option<Outcome>,
    ) -> MatchRecord {
        MatchRecord {
            match_id: id.into(),
            phase: Phase::Group,
            leg: 1,
            date: NaiveDate::from_ymd_opt(date.0, date.1, date.2).unwrap(),
            home: home.into(),
            away: away.into(),
            home_goals: None,
            away_goals: None,
            outcome,
        }
    }

    fn tiny_dataset() -> Dataset {
        let teams = vec![tiny_team(1, "AAA"), tiny_team(2, "BBB")];
        let matches = vec![
            rec("M1", (2013, 9, 17), "AAA", "BBB", Some(Outcome::HomeWin)),
            rec("M2", (2013, 10, 1), "BBB", "AAA", None),
        ];
        Dataset::new(teams, matches).unwrap()
    }

    fn small_config(seed: u64) -> SamplerConfig {
        SamplerConfig {
            n_chains: 2,
            n_iter: 1500,
            n_burnin: 500,
            thin: 1,
            seed,
            target_accept: 0.35,
        }
    }

    #[test]
    fn vanishing_opinion_leaves_the_fit_unchanged() {
        let ds = tiny_dataset();
        let adj = ZeroAdjustment;
        let priors = adj.default_priors();
        let std = adj.anchors(&ds.teams).unwrap();
        let train = ds.indexed_results(|m| m.match_id == "M1");
        let targets = vec!["M2".to_string()];
        let third = 1.0 / 3.0;
        let ops = vec![opinion("M2", [third, third, third], 3.0)];

        let (with_op, w1) =
            fuse_forecasts(&ds, &train, &targets, &ops, &priors, &std, &small_config(9)).unwrap();
        let (without, w2) =
            fuse_forecasts(&ds, &train, &targets, &[], &priors, &std, &small_config(9)).unwrap();
        assert!(w1.is_empty() && w2.is_empty());
        assert_eq!(with_op[0].predictive, without[0].predictive);
        assert_eq!(with_op[0].plug_in, without[0].plug_in);
    }

    #[test]
    fn strong_opinion_tilts_the_forecast() {
        let ds = tiny_dataset();
        let adj = ZeroAdjustment;
        let priors = adj.default_priors();
        let std = adj.anchors(&ds.teams).unwrap();
        let train = ds.indexed_results(|m| m.match_id == "M1");
        let targets = vec!["M2".to_string()];
        // Expert insists team BBB (the home side of M2) loses.
        let ops = vec![opinion("M2", [0.05, 0.15, 0.80], 50.0)];

        let (fused, _) =
            fuse_forecasts(&ds, &train, &targets, &ops, &priors, &std, &small_config(9)).unwrap();
        let (baseline, _) =
            fuse_forecasts(&ds, &train, &targets, &[], &priors, &std, &small_config(9)).unwrap();
        assert!(
            fused[0].predictive.p_loss > baseline[0].predictive.p_loss + 0.05,
            "fused {:?} vs baseline {:?}",
            fused[0].predictive,
            baseline[0].predictive
        );
    }

    #[test]
    fn detached_opinions_warn_and_are_ignored() {
        let ds = tiny_dataset();
        let adj = ZeroAdjustment;
        let priors = adj.default_priors();
        let std = adj.anchors(&ds.teams).unwrap();
        let train = ds.indexed_results(|m| m.match_id == "M1");
        let targets = vec!["M2".to_string()];
        let ops = vec![
            opinion("NOPE", [0.2, 0.3, 0.5], 10.0),
            opinion("M1", [0.2, 0.3, 0.5], 10.0),
        ];
        let (fused, warnings) =
            fuse_forecasts(&ds, &train, &targets, &ops, &priors, &std, &small_config(9)).unwrap();
        let (baseline, _) =
            fuse_forecasts(&ds, &train, &targets, &[], &priors, &std, &small_config(9)).unwrap();
        assert_eq!(warnings.len(), 2);
        assert!(warnings[0].contains("unknown match"));
        assert!(warnings[1].contains("already-played"));
        assert_eq!(fused[0].predictive, baseline[0].predictive);
    }

    #[test]
    fn unknown_target_is_an_error() {
        let ds = tiny_dataset();
        let adj = ZeroAdjustment;
        let priors = adj.default_priors();
        let std = adj.anchors(&ds.teams).unwrap();
        let err = fuse_forecasts(
            &ds,
            &[],
            &["GHOST".to_string()],
            &[],
            &priors,
            &std,
            &small_config(1),
        )
        .unwrap_err();
        assert!(err.to_string().contains("GHOST"));
    }
}
