//! Season domain data: teams, external ratings, match records, and the
//! derived dataset statistics (standardized ratings, group-balance ANOVA,
//! rating correlation, group standings).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// External strength-anchoring system for the prior regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RatingSystem {
    /// No anchoring: every team starts at the same expected strength.
    #[serde(rename = "ZERO", alias = "Zero", alias = "zero")]
    Zero,
    /// UEFA club coefficient.
    #[serde(rename = "UEFACR", alias = "Uefacr", alias = "uefacr")]
    Uefacr,
    /// Football Club World Ranking points.
    #[serde(rename = "FCWR", alias = "Fcwr", alias = "fcwr")]
    Fcwr,
}

impl fmt::Display for RatingSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RatingSystem::Zero => "ZERO",
            RatingSystem::Uefacr => "UEFACR",
            RatingSystem::Fcwr => "FCWR",
        };
        f.write_str(s)
    }
}

impl FromStr for RatingSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(RatingSystem::Zero),
            "uefacr" => Ok(RatingSystem::Uefacr),
            "fcwr" => Ok(RatingSystem::Fcwr),
            other => Err(Error::validation(format!(
                "unknown rating system '{other}' (expected zero, uefacr or fcwr)"
            ))),
        }
    }
}

/// One of the 32 competing clubs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Team {
    pub team_id: u32,
    pub name: String,
    /// 3-letter code, unique within a season dataset.
    pub abbrev: String,
    /// ISO-3 country code.
    pub country: String,
    /// Seeding pot 1–4.
    pub pot: u8,
    /// Group letter A–H.
    pub group: char,
    pub uefacr: f64,
    pub fcwr: f64,
}

impl Team {
    /// Raw rating under `system`; 0 for the zero system.
    pub fn rating(&self, system: RatingSystem) -> f64 {
        match system {
            RatingSystem::Zero => 0.0,
            RatingSystem::Uefacr => self.uefacr,
            RatingSystem::Fcwr => self.fcwr,
        }
    }
}

/// Competition phase, ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "GROUP")]
    Group,
    #[serde(rename = "R16")]
    R16,
    #[serde(rename = "QF")]
    Qf,
    #[serde(rename = "SF")]
    Sf,
    #[serde(rename = "FINAL")]
    Final,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Group => "GROUP",
            Phase::R16 => "R16",
            Phase::Qf => "QF",
            Phase::Sf => "SF",
            Phase::Final => "FINAL",
        };
        f.write_str(s)
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GROUP" => Ok(Phase::Group),
            "R16" => Ok(Phase::R16),
            "QF" => Ok(Phase::Qf),
            "SF" => Ok(Phase::Sf),
            "FINAL" | "F" => Ok(Phase::Final),
            other => Err(Error::validation(format!(
                "unknown phase '{other}' (expected GROUP, R16, QF, SF or FINAL)"
            ))),
        }
    }
}

/// Match result from the home team's perspective, coded 1/2/3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    HomeWin,
    Draw,
    HomeLoss,
}

impl Outcome {
    /// Numeric code: 1 = home win, 2 = draw, 3 = home loss.
    pub fn code(self) -> u8 {
        match self {
            Outcome::HomeWin => 1,
            Outcome::Draw => 2,
            Outcome::HomeLoss => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Outcome::HomeWin),
            2 => Some(Outcome::Draw),
            3 => Some(Outcome::HomeLoss),
            _ => None,
        }
    }

    pub fn from_goals(home_goals: u32, away_goals: u32) -> Self {
        match home_goals.cmp(&away_goals) {
            std::cmp::Ordering::Greater => Outcome::HomeWin,
            std::cmp::Ordering::Equal => Outcome::Draw,
            std::cmp::Ordering::Less => Outcome::HomeLoss,
        }
    }

    /// Zero-based index into probability triples.
    pub fn index(self) -> usize {
        self.code() as usize - 1
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        Outcome::from_code(code)
            .ok_or_else(|| serde::de::Error::custom(format!("outcome code {code} not in 1..=3")))
    }
}

/// One match, either played (outcome present) or a forthcoming fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: String,
    pub phase: Phase,
    /// 1 or 2; the final is always leg 1.
    pub leg: u8,
    pub date: NaiveDate,
    pub home: String,
    pub away: String,
    pub home_goals: Option<u32>,
    pub away_goals: Option<u32>,
    pub outcome: Option<Outcome>,
}

impl MatchRecord {
    pub fn is_fixture(&self) -> bool {
        self.outcome.is_none()
    }
}

/// Centered, standardized anchor values x̃ per team (sample mean 0, SD 1 with
/// the n−1 divisor); all zeros for the zero system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandardizedRatings {
    pub system: RatingSystem,
    /// Aligned with the team list order used to build it.
    pub values: Vec<f64>,
    pub mean_used: f64,
    pub sd_used: f64,
}

/// Standardize the raw ratings of `teams` under `system`.
pub fn standardize_ratings(teams: &[Team], system: RatingSystem) -> Result<StandardizedRatings> {
    if system == RatingSystem::Zero {
        return Ok(StandardizedRatings {
            system,
            values: vec![0.0; teams.len()],
            mean_used: 0.0,
            sd_used: 1.0,
        });
    }
    let raw: Vec<f64> = teams.iter().map(|t| t.rating(system)).collect();
    let m = stats::mean(&raw);
    let s = stats::sd(&raw);
    if s == 0.0 {
        return Err(Error::validation(format!(
            "degenerate {system} ratings: zero standard deviation across {} teams",
            teams.len()
        )));
    }
    Ok(StandardizedRatings {
        system,
        values: raw.iter().map(|x| (x - m) / s).collect(),
        mean_used: m,
        sd_used: s,
    })
}

/// One-way ANOVA of standardized ratings on the group factor.
#[derive(Debug, Clone, Serialize)]
pub struct AnovaResult {
    pub f: f64,
    pub group_means: BTreeMap<char, f64>,
    /// sqrt(MSE / group size): standard error of a group mean.
    pub se_group_mean: f64,
}

/// Group-balance ANOVA over a complete 8-group × 4-team structure.
pub fn group_balance_anova(std: &StandardizedRatings, teams: &[Team]) -> Result<AnovaResult> {
    let mut groups: BTreeMap<char, Vec<f64>> = BTreeMap::new();
    for (team, &x) in teams.iter().zip(&std.values) {
        groups.entry(team.group).or_default().push(x);
    }
    if groups.len() != 8 || groups.values().any(|g| g.len() != 4) {
        return Err(Error::validation(format!(
            "group balance needs 8 groups of 4 teams, got {} groups of sizes {:?}",
            groups.len(),
            groups.values().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let all: Vec<f64> = std.values.clone();
    let grand = stats::mean(&all);
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    let mut group_means = BTreeMap::new();
    for (&g, xs) in &groups {
        let m = stats::mean(xs);
        group_means.insert(g, m);
        ss_between += xs.len() as f64 * (m - grand) * (m - grand);
        ss_within += xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    }
    let df_between = (groups.len() - 1) as f64; // 7
    let df_within = (all.len() - groups.len()) as f64; // 24
    let mse = ss_within / df_within;
    // Zero between-group variation is reported as F = 0 even when the
    // within-group variation is also zero.
    let f = if ss_between == 0.0 {
        0.0
    } else {
        (ss_between / df_between) / mse
    };
    Ok(AnovaResult {
        f,
        group_means,
        se_group_mean: (mse / 4.0).sqrt(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub ci95: (f64, f64),
}

/// Pearson correlation between the two raw rating lists with a Fisher-z 95%
/// interval.
pub fn rating_correlation(teams: &[Team]) -> Result<CorrelationResult> {
    if teams.len() < 4 {
        return Err(Error::validation(format!(
            "rating correlation needs at least 4 teams, got {}",
            teams.len()
        )));
    }
    let xs: Vec<f64> = teams.iter().map(|t| t.uefacr).collect();
    let ys: Vec<f64> = teams.iter().map(|t| t.fcwr).collect();
    let r = stats::pearson(&xs, &ys)
        .ok_or_else(|| Error::validation("rating correlation undefined: zero variance"))?;
    Ok(CorrelationResult {
        r,
        ci95: stats::fisher_ci95(r, teams.len()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StandingsRow {
    pub abbrev: String,
    pub points: u32,
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
}

/// Group-stage table for one group: 3/1/0 points, sorted by points descending
/// with alphabetical tie-break.
pub fn group_standings(teams: &[Team], matches: &[MatchRecord], group: char) -> Vec<StandingsRow> {
    let mut rows: BTreeMap<&str, StandingsRow> = teams
        .iter()
        .filter(|t| t.group == group)
        .map(|t| {
            (
                t.abbrev.as_str(),
                StandingsRow {
                    abbrev: t.abbrev.clone(),
                    points: 0,
                    wins: 0,
                    draws: 0,
                    losses: 0,
                },
            )
        })
        .collect();
    for m in matches {
        if m.phase != Phase::Group {
            continue;
        }
        let Some(outcome) = m.outcome else { continue };
        if !rows.contains_key(m.home.as_str()) || !rows.contains_key(m.away.as_str()) {
            continue;
        }
        let (home_wdl, away_wdl) = match outcome {
            Outcome::HomeWin => ((1, 0, 0), (0, 0, 1)),
            Outcome::Draw => ((0, 1, 0), (0, 1, 0)),
            Outcome::HomeLoss => ((0, 0, 1), (1, 0, 0)),
        };
        for (abbrev, (w, d, l)) in [(&m.home, home_wdl), (&m.away, away_wdl)] {
            let row = rows.get_mut(abbrev.as_str()).expect("checked above");
            row.wins += w;
            row.draws += d;
            row.losses += l;
            row.points += 3 * w + d;
        }
    }
    let mut out: Vec<StandingsRow> = rows.into_values().collect();
    out.sort_by(|a, b| b.points.cmp(&a.points).then(a.abbrev.cmp(&b.abbrev)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn team(id: u32, abbrev: &str, pot: u8, group: char, uefacr: f64, fcwr: f64) -> Team {
        Team {
            team_id: id,
            name: format!("Team {abbrev}"),
            abbrev: abbrev.into(),
            country: "XXX".into(),
            pot,
            group,
            uefacr,
            fcwr,
        }
    }

    fn eight_groups() -> Vec<Team> {
        let mut teams = Vec::new();
        let mut id = 1;
        for g in ['A', 'B', 'C', 'D', 'E', 'F', 'G', 'H'] {
            for p in 1..=4u8 {
                teams.push(team(
                    id,
                    &format!("{g}{p}X"),
                    p,
                    g,
                    100.0 - id as f64,
                    10_000.0 + 37.0 * id as f64,
                ));
                id += 1;
            }
        }
        teams
    }

    #[test]
    fn zero_system_standardizes_to_zeros() {
        let teams = eight_groups();
        let std = standardize_ratings(&teams, RatingSystem::Zero).unwrap();
        assert!(std.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn standardized_mean_zero_sd_one() {
        let teams = eight_groups();
        for system in [RatingSystem::Uefacr, RatingSystem::Fcwr] {
            let std = standardize_ratings(&teams, system).unwrap();
            assert!(stats::mean(&std.values).abs() < 1e-10);
            assert!((stats::sd(&std.values) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn standardize_rejects_constant_ratings() {
        let mut teams = eight_groups();
        for t in &mut teams {
            t.uefacr = 50.0;
        }
        assert!(standardize_ratings(&teams, RatingSystem::Uefacr).is_err());
    }

    #[test]
    fn standardize_preserves_rank_order_and_shift_invariance() {
        let teams = eight_groups();
        let a = standardize_ratings(&teams, RatingSystem::Uefacr).unwrap();
        let mut shifted = teams.clone();
        for t in &mut shifted {
            t.uefacr += 123.0;
        }
        let b = standardize_ratings(&shifted, RatingSystem::Uefacr).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-10);
        }
        let max_raw = teams
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.uefacr.partial_cmp(&b.1.uefacr).unwrap())
            .unwrap()
            .0;
        let max_std = a
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(max_raw, max_std);
    }

    #[test]
    fn anova_partitions_total_sum_of_squares() {
        let teams = eight_groups();
        let std = standardize_ratings(&teams, RatingSystem::Fcwr).unwrap();
        let res = group_balance_anova(&std, &teams).unwrap();
        // Reconstruct SS identity: SST = SSB + SSW.
        let grand = stats::mean(&std.values);
        let sst: f64 = std.values.iter().map(|x| (x - grand) * (x - grand)).sum();
        let mut ssb = 0.0;
        for (&g, &m) in &res.group_means {
            let n = teams.iter().filter(|t| t.group == g).count() as f64;
            ssb += n * (m - grand) * (m - grand);
        }
        let ssw = res.se_group_mean * res.se_group_mean * 4.0 * 24.0;
        assert!((sst - ssb - ssw).abs() < 1e-9 * sst.abs().max(1.0));
    }

    #[test]
    fn anova_requires_complete_groups() {
        let mut teams = eight_groups();
        teams.pop();
        let std = standardize_ratings(&teams, RatingSystem::Uefacr).unwrap();
        assert!(group_balance_anova(&std, &teams).is_err());
    }

    #[test]
    fn anova_zero_between_is_zero_f() {
        // Identical per-group pattern: every group mean equals the grand mean.
        let mut teams = eight_groups();
        for (i, t) in teams.iter_mut().enumerate() {
            t.uefacr = [10.0, 20.0, 30.0, 40.0][i % 4];
        }
        let std = standardize_ratings(&teams, RatingSystem::Uefacr).unwrap();
        let res = group_balance_anova(&std, &teams).unwrap();
        assert!(res.f.abs() < 1e-20);
    }

    #[test]
    fn correlation_exact_linear() {
        let mut teams = eight_groups();
        for t in &mut teams {
            t.fcwr = 3.0 * t.uefacr + 7.0;
        }
        let res = rating_correlation(&teams).unwrap();
        assert!((res.r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_affine_invariant() {
        let teams = eight_groups();
        let a = rating_correlation(&teams).unwrap();
        let mut scaled = teams.clone();
        for t in &mut scaled {
            t.uefacr = 2.5 * t.uefacr - 40.0;
            t.fcwr = 0.1 * t.fcwr + 3.0;
        }
        let b = rating_correlation(&scaled).unwrap();
        assert!((a.r - b.r).abs() < 1e-10);
    }

    fn match_row(home: &str, away: &str, hg: u32, ag: u32) -> MatchRecord {
        MatchRecord {
            match_id: format!("G-{home}-{away}"),
            phase: Phase::Group,
            leg: 1,
            date: NaiveDate::from_ymd_opt(2013, 9, 17).unwrap(),
            home: home.into(),
            away: away.into(),
            home_goals: Some(hg),
            away_goals: Some(ag),
            outcome: Some(Outcome::from_goals(hg, ag)),
        }
    }

    #[test]
    fn standings_scoring_rule() {
        let teams = eight_groups();
        let rows = group_standings(&teams, &[], 'A');
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.points == 0));

        let ms = [
            match_row("A1X", "A2X", 2, 0),
            match_row("A1X", "A3X", 1, 1),
            match_row("A4X", "A1X", 0, 3),
        ];
        let rows = group_standings(&teams, &ms, 'A');
        assert_eq!(rows[0].abbrev, "A1X");
        assert_eq!(rows[0].points, 7); // 2 wins, 1 draw
        assert_eq!(rows[0].wins, 2);
        assert_eq!(rows[0].draws, 1);
        // Total points = 3 * decisive + 2 * drawn.
        let total: u32 = rows.iter().map(|r| r.points).sum();
        assert_eq!(total, 3 * 2 + 2 * 1);
    }

    #[test]
    fn outcome_from_goals() {
        assert_eq!(Outcome::from_goals(2, 1), Outcome::HomeWin);
        assert_eq!(Outcome::from_goals(1, 1), Outcome::Draw);
        assert_eq!(Outcome::from_goals(0, 4), Outcome::HomeLoss);
    }

    #[test]
    fn phase_round_trips() {
        for p in [Phase::Group, Phase::R16, Phase::Qf, Phase::Sf, Phase::Final] {
            assert_eq!(p.to_string().parse::<Phase>().unwrap(), p);
        }
        assert!(Phase::Group < Phase::R16 && Phase::Sf < Phase::Final);
    }

    #[test]
    fn rating_system_serde_names() {
        let json = serde_json::to_string(&RatingSystem::Fcwr).unwrap();
        assert_eq!(json, "\"FCWR\"");
        let parsed: RatingSystem = serde_json::from_str("\"fcwr\"").unwrap();
        assert_eq!(parsed, RatingSystem::Fcwr);
    }
}
