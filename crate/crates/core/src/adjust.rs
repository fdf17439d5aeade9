//! Strength-adjustment strategies behind a common trait.
//!
//! An adjustment decides how team strengths are anchored before any match is
//! played: which external rating feeds the prior regression and which default
//! priors apply. Strategies are registered by name and selected at runtime,
//! so alternative anchorings plug in without touching the sampler.

use crate::domain::{standardize_ratings, RatingSystem, StandardizedRatings, Team};
use crate::error::Result;
use crate::model::{GaussianPrior, PriorSet};

/// One way of anchoring prior team strengths.
pub trait Adjustment: Send + Sync {
    /// Registry key, lower-case.
    fn name(&self) -> &str;

    /// Rating system this adjustment anchors on.
    fn system(&self) -> RatingSystem;

    /// Standardized anchor values for the given team list.
    fn anchors(&self, teams: &[Team]) -> Result<StandardizedRatings>;

    /// Calibrated default priors for this adjustment.
    fn default_priors(&self) -> PriorSet;
}

fn shared_delta() -> GaussianPrior {
    GaussianPrior::new(0.335, 1.0 / 300.0)
}

fn shared_h() -> GaussianPrior {
    GaussianPrior::new(0.225, 1.0 / 100.0)
}

/// No anchoring: equal prior strength for every team.
pub struct ZeroAdjustment;

impl Adjustment for ZeroAdjustment {
    fn name(&self) -> &str {
        "zero"
    }

    fn system(&self) -> RatingSystem {
        RatingSystem::Zero
    }

    fn anchors(&self, teams: &[Team]) -> Result<StandardizedRatings> {
        standardize_ratings(teams, RatingSystem::Zero)
    }

    fn default_priors(&self) -> PriorSet {
        PriorSet {
            system: RatingSystem::Zero,
            delta: shared_delta(),
            h: shared_h(),
            beta: None,
            gamma: GaussianPrior::new(-1.00, 1.0 / 5.79),
        }
    }
}

/// Anchoring on the UEFA club coefficient.
pub struct UefacrAdjustment;

impl Adjustment for UefacrAdjustment {
    fn name(&self) -> &str {
        "uefacr"
    }

    fn system(&self) -> RatingSystem {
        RatingSystem::Uefacr
    }

    fn anchors(&self, teams: &[Team]) -> Result<StandardizedRatings> {
        standardize_ratings(teams, RatingSystem::Uefacr)
    }

    fn default_priors(&self) -> PriorSet {
        PriorSet {
            system: RatingSystem::Uefacr,
            delta: shared_delta(),
            h: shared_h(),
            beta: Some(GaussianPrior::new(0.250, 1.0 / 100.0)),
            gamma: GaussianPrior::new(-1.13, 1.0 / 5.00),
        }
    }
}

/// Anchoring on Football Club World Ranking points.
pub struct FcwrAdjustment;

impl Adjustment for FcwrAdjustment {
    fn name(&self) -> &str {
        "fcwr"
    }

    fn system(&self) -> RatingSystem {
        RatingSystem::Fcwr
    }

    fn anchors(&self, teams: &[Team]) -> Result<StandardizedRatings> {
        standardize_ratings(teams, RatingSystem::Fcwr)
    }

    fn default_priors(&self) -> PriorSet {
        PriorSet {
            system: RatingSystem::Fcwr,
            delta: shared_delta(),
            h: shared_h(),
            beta: Some(GaussianPrior::new(0.430, 1.0 / 120.0)),
            gamma: GaussianPrior::new(-2.00, 1.0 / 2.30),
        }
    }
}

/// Name-keyed collection of adjustment strategies.
pub struct AdjustmentRegistry {
    entries: Vec<Box<dyn Adjustment>>,
}

impl AdjustmentRegistry {
    /// Registry holding the three built-in adjustments.
    pub fn builtin() -> Self {
        let mut reg = AdjustmentRegistry { entries: Vec::new() };
        reg.register(Box::new(ZeroAdjustment));
        reg.register(Box::new(UefacrAdjustment));
        reg.register(Box::new(FcwrAdjustment));
        reg
    }

    /// Add a strategy, replacing any existing one with the same name.
    pub fn register(&mut self, adjustment: Box<dyn Adjustment>) {
        let name = adjustment.name().to_ascii_lowercase();
        self.entries.retain(|e| e.name() != name);
        self.entries.push(adjustment);
    }

    /// Case-insensitive lookup.
    pub fn get(&self, name: &str) -> Option<&dyn Adjustment> {
        let lower = name.to_ascii_lowercase();
        self.entries
            .iter()
            .find(|e| e.name() == lower)
            .map(|e| e.as_ref())
    }

    /// Registered names in registration order.
    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

impl Default for AdjustmentRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
