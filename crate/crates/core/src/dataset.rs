//! File ingestion and emission: teams.csv, matches.csv, priors.json,
//! expert.json, draws.csv, forecasts.csv, ratings.csv.
//!
//! Loaders validate aggressively and collect non-fatal findings as warning
//! strings so callers can surface them without aborting.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use crate::domain::{MatchRecord, Outcome, Phase, RatingSystem, Team};
use crate::error::{Error, Result};
use crate::expert::ExpertOpinion;
use crate::forecast::{Forecast, RatingEntry};
use crate::model::{OutcomeProbs, ParamState, PriorSet};
use crate::sampler::PosteriorDraws;

const TEAMS_HEADER: [&str; 8] = [
    "team_id", "name", "abbrev", "country", "pot", "group", "uefacr", "fcwr",
];
const MATCHES_HEADER: [&str; 9] = [
    "match_id",
    "phase",
    "leg",
    "date",
    "home",
    "away",
    "home_goals",
    "away_goals",
    "outcome",
];

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn csv_reader(contents: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(contents.as_bytes())
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = match e.position() {
        Some(p) => p.line() as usize,
        None => 0,
    };
    Error::parse(path, line, e.to_string())
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn check_header(path: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    let got_cols: Vec<&str> = got.iter().collect();
    if got_cols != want {
        return Err(Error::parse(
            path,
            1,
            format!("bad header: expected '{}', got '{}'", want.join(","), got_cols.join(",")),
        ));
    }
    Ok(())
}

fn field<'r>(path: &Path, record: &'r csv::StringRecord, ix: usize, name: &str) -> Result<&'r str> {
    record.get(ix).ok_or_else(|| {
        Error::parse(path, record_line(record), format!("missing field '{name}'"))
    })
}

/// Load and validate the team table.
///
/// Row-level defects are hard parse errors naming the line; a duplicate
/// abbreviation is a validation error. An unusual team count (anything but
/// 32) and incomplete group/pot structure are only reported as warnings so
/// reduced datasets stay usable.
pub fn load_teams(path: impl AsRef<Path>) -> Result<(Vec<Team>, Vec<String>)> {
    let path = path.as_ref();
    let contents = read_to_string(path)?;
    let mut warnings = Vec::new();
    if contents.trim().is_empty() {
        warnings.push(format!("{}: empty teams file", path.display()));
        return Ok((Vec::new(), warnings));
    }
    let mut reader = csv_reader(&contents);
    check_header(path, reader.headers().map_err(|e| csv_err(path, e))?, &TEAMS_HEADER)?;

    let mut teams = Vec::new();
    let mut seen_abbrev: HashSet<String> = HashSet::new();
    let mut seen_id: HashSet<u32> = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let perr = |name: &str, value: &str| {
            Error::parse(path, line, format!("bad {name} value '{value}'"))
        };

        let team_id: u32 = {
            let raw = field(path, &record, 0, "team_id")?;
            raw.parse().map_err(|_| perr("team_id", raw))?
        };
        if !(1..=32).contains(&team_id) {
            return Err(Error::parse(path, line, format!("team_id {team_id} outside 1..=32")));
        }
        let name = field(path, &record, 1, "name")?.to_string();
        if name.is_empty() {
            return Err(Error::parse(path, line, "empty team name"));
        }
        let abbrev = field(path, &record, 2, "abbrev")?.to_string();
        if abbrev.len() != 3 || !abbrev.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()) {
            return Err(perr("abbrev", &abbrev));
        }
        let country = field(path, &record, 3, "country")?.to_string();
        if country.len() != 3 || !country.chars().all(|c| c.is_ascii_uppercase()) {
            return Err(perr("country", &country));
        }
        let pot: u8 = {
            let raw = field(path, &record, 4, "pot")?;
            raw.parse().map_err(|_| perr("pot", raw))?
        };
        if !(1..=4).contains(&pot) {
            return Err(Error::parse(path, line, format!("pot {pot} outside 1..=4")));
        }
        let group = {
            let raw = field(path, &record, 5, "group")?;
            let mut chars = raw.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if ('A'..='H').contains(&c) => c,
                _ => return Err(perr("group", raw)),
            }
        };
        let uefacr: f64 = {
            let raw = field(path, &record, 6, "uefacr")?;
            raw.parse().map_err(|_| perr("uefacr", raw))?
        };
        let fcwr: f64 = {
            let raw = field(path, &record, 7, "fcwr")?;
            raw.parse().map_err(|_| perr("fcwr", raw))?
        };
        if !uefacr.is_finite() || uefacr < 0.0 || !fcwr.is_finite() || fcwr < 0.0 {
            return Err(Error::parse(path, line, "ratings must be finite and non-negative"));
        }

        if !seen_abbrev.insert(abbrev.clone()) {
            return Err(Error::validation(format!(
                "{}: duplicate team abbreviation '{abbrev}'",
                path.display()
            )));
        }
        if !seen_id.insert(team_id) {
            return Err(Error::validation(format!(
                "{}: duplicate team_id {team_id}",
                path.display()
            )));
        }
        teams.push(Team { team_id, name, abbrev, country, pot, group, uefacr, fcwr });
    }

    if teams.is_empty() {
        warnings.push(format!("{}: empty teams file", path.display()));
    } else if teams.len() != 32 {
        warnings.push(format!(
            "{}: {} teams (a full season has 32)",
            path.display(),
            teams.len()
        ));
    } else {
        let mut by_group: HashMap<char, usize> = HashMap::new();
        let mut by_pot: HashMap<u8, usize> = HashMap::new();
        for t in &teams {
            *by_group.entry(t.group).or_default() += 1;
            *by_pot.entry(t.pot).or_default() += 1;
        }
        if by_group.len() != 8 || by_group.values().any(|&n| n != 4) {
            warnings.push(format!("{}: groups are not 8 x 4 teams", path.display()));
        }
        if by_pot.len() != 4 || by_pot.values().any(|&n| n != 8) {
            warnings.push(format!("{}: pots are not 4 x 8 teams", path.display()));
        }
    }
    Ok((teams, warnings))
}

/// Load match records, resolving abbreviations against `teams`.
///
/// Outcomes are derived from goals when the outcome column is blank; a stated
/// outcome that contradicts the goals is rejected. Rows with goals absent and
/// outcome present are accepted (results-only datasets); rows with everything
/// absent are forthcoming fixtures.
pub fn load_matches(
    path: impl AsRef<Path>,
    teams: &[Team],
) -> Result<(Vec<MatchRecord>, Vec<String>)> {
    let path = path.as_ref();
    let known: HashSet<&str> = teams.iter().map(|t| t.abbrev.as_str()).collect();
    let contents = read_to_string(path)?;
    let mut warnings = Vec::new();
    if contents.trim().is_empty() {
        warnings.push(format!("{}: empty matches file", path.display()));
        return Ok((Vec::new(), warnings));
    }
    let mut reader = csv_reader(&contents);
    check_header(path, reader.headers().map_err(|e| csv_err(path, e))?, &MATCHES_HEADER)?;

    let mut matches = Vec::new();
    let mut seen_id: HashSet<String> = HashSet::new();
    let mut group_pairs: HashSet<(String, String)> = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let perr = |name: &str, value: &str| {
            Error::parse(path, line, format!("bad {name} value '{value}'"))
        };

        let match_id = field(path, &record, 0, "match_id")?.to_string();
        if match_id.is_empty() {
            return Err(Error::parse(path, line, "empty match_id"));
        }
        let phase: Phase = {
            let raw = field(path, &record, 1, "phase")?;
            raw.parse().map_err(|_| perr("phase", raw))?
        };
        let leg: u8 = {
            let raw = field(path, &record, 2, "leg")?;
            raw.parse().map_err(|_| perr("leg", raw))?
        };
        if !(1..=2).contains(&leg) {
            return Err(Error::parse(path, line, format!("leg {leg} outside 1..=2")));
        }
        let date = {
            let raw = field(path, &record, 3, "date")?;
            chrono::NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| perr("date", raw))?
        };
        let home = field(path, &record, 4, "home")?.to_string();
        let away = field(path, &record, 5, "away")?.to_string();
        let parse_goals = |ix: usize, name: &str| -> Result<Option<u32>> {
            let raw = field(path, &record, ix, name)?;
            if raw.is_empty() {
                Ok(None)
            } else {
                raw.parse().map(Some).map_err(|_| perr(name, raw))
            }
        };
        let home_goals = parse_goals(6, "home_goals")?;
        let away_goals = parse_goals(7, "away_goals")?;
        let stated_outcome = {
            let raw = field(path, &record, 8, "outcome")?;
            if raw.is_empty() {
                None
            } else {
                let code: u8 = raw.parse().map_err(|_| perr("outcome", raw))?;
                Some(Outcome::from_code(code).ok_or_else(|| perr("outcome", raw))?)
            }
        };

        let verr = |msg: String| Error::validation(format!("{}:{line}: {msg}", path.display()));
        if !known.contains(home.as_str()) {
            return Err(verr(format!("unknown team abbreviation '{home}'")));
        }
        if !known.contains(away.as_str()) {
            return Err(verr(format!("unknown team abbreviation '{away}'")));
        }
        if home == away {
            return Err(verr(format!("team '{home}' cannot play itself")));
        }
        if phase == Phase::Final && leg != 1 {
            return Err(verr("the final is a single match (leg must be 1)".into()));
        }
        let outcome = match (home_goals, away_goals, stated_outcome) {
            (Some(hg), Some(ag), None) => Some(Outcome::from_goals(hg, ag)),
            (Some(hg), Some(ag), Some(o)) => {
                if Outcome::from_goals(hg, ag) != o {
                    return Err(verr(format!(
                        "outcome {} contradicts goals {hg}-{ag}",
                        o.code()
                    )));
                }
                Some(o)
            }
            (None, None, stated) => stated,
            _ => {
                return Err(Error::parse(
                    path,
                    line,
                    "home_goals and away_goals must be both present or both blank",
                ));
            }
        };

        if !seen_id.insert(match_id.clone()) {
            return Err(verr(format!("duplicate match_id '{match_id}'")));
        }
        if phase == Phase::Group && !group_pairs.insert((home.clone(), away.clone())) {
            return Err(verr(format!(
                "group pairing {home} vs {away} appears more than once"
            )));
        }
        matches.push(MatchRecord {
            match_id,
            phase,
            leg,
            date,
            home,
            away,
            home_goals,
            away_goals,
            outcome,
        });
    }
    if matches.is_empty() {
        warnings.push(format!("{}: no match rows", path.display()));
    }
    Ok((matches, warnings))
}

/// Load a prior set from JSON.
///
/// All variances must be strictly positive. A `beta` entry under the zero
/// system is dropped with a warning (there is no regression to anchor);
/// a missing `beta` under an anchored system is an error.
pub fn load_priors(path: impl AsRef<Path>) -> Result<(PriorSet, Vec<String>)> {
    let path = path.as_ref();
    let contents = read_to_string(path)?;
    let mut priors: PriorSet = serde_json::from_str(&contents)
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    let mut warnings = Vec::new();
    if priors.system == RatingSystem::Zero && priors.beta.is_some() {
        warnings.push(format!(
            "{}: beta prior ignored under the zero system (no regression term)",
            path.display()
        ));
        priors.beta = None;
    }
    priors
        .validate()
        .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
    Ok((priors, warnings))
}

/// Load expert opinions from JSON: each entry a full outcome simplex with a
/// positive equivalent-sample weight.
pub fn load_expert(path: impl AsRef<Path>) -> Result<Vec<ExpertOpinion>> {
    #[derive(serde::Deserialize)]
    struct Row {
        match_id: String,
        p_win: f64,
        p_draw: f64,
        p_loss: f64,
        weight: f64,
    }
    let path = path.as_ref();
    let contents = read_to_string(path)?;
    let rows: Vec<Row> = serde_json::from_str(&contents)
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let verr = |msg: String| {
            Error::validation(format!("{}: opinion {}: {msg}", path.display(), i + 1))
        };
        if row.match_id.is_empty() {
            return Err(verr("empty match_id".into()));
        }
        let ps = [row.p_win, row.p_draw, row.p_loss];
        if ps.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(verr(format!("probabilities outside [0,1]: {ps:?}")));
        }
        let sum: f64 = ps.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(verr(format!("probabilities sum to {sum}, not 1")));
        }
        if !row.weight.is_finite() || row.weight <= 0.0 {
            return Err(verr(format!("weight {} must be positive", row.weight)));
        }
        out.push(ExpertOpinion {
            match_id: row.match_id.clone(),
            probs: OutcomeProbs {
                p_win: row.p_win,
                p_draw: row.p_draw,
                p_loss: row.p_loss,
            },
            weight: row.weight,
        });
    }
    Ok(out)
}

/// A validated, cross-referenced season: teams plus matches with an
/// abbreviation index. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub teams: Vec<Team>,
    pub matches: Vec<MatchRecord>,
    index: HashMap<String, usize>,
}

impl Dataset {
    /// Build from already-validated parts; re-checks cross-references.
    pub fn new(teams: Vec<Team>, matches: Vec<MatchRecord>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, t) in teams.iter().enumerate() {
            if index.insert(t.abbrev.clone(), i).is_some() {
                return Err(Error::validation(format!(
                    "duplicate team abbreviation '{}'",
                    t.abbrev
                )));
            }
        }
        for m in &matches {
            for ab in [&m.home, &m.away] {
                if !index.contains_key(ab) {
                    return Err(Error::validation(format!(
                        "match '{}' references unknown team '{ab}'",
                        m.match_id
                    )));
                }
            }
        }
        Ok(Dataset { teams, matches, index })
    }

    /// Load both files and combine their warnings.
    pub fn load(
        teams_path: impl AsRef<Path>,
        matches_path: impl AsRef<Path>,
    ) -> Result<(Self, Vec<String>)> {
        let (teams, mut warnings) = load_teams(teams_path)?;
        let (matches, match_warnings) = load_matches(matches_path, &teams)?;
        warnings.extend(match_warnings);
        Ok((Dataset::new(teams, matches)?, warnings))
    }

    pub fn n_teams(&self) -> usize {
        self.teams.len()
    }

    pub fn team_index(&self, abbrev: &str) -> Option<usize> {
        self.index.get(abbrev).copied()
    }

    pub fn match_by_id(&self, match_id: &str) -> Option<&MatchRecord> {
        self.matches.iter().find(|m| m.match_id == match_id)
    }

    /// Index the home/away sides of `m` into team-list positions.
    /// The construction invariant guarantees both resolve.
    pub fn sides(&self, m: &MatchRecord) -> (usize, usize) {
        (
            self.team_index(&m.home).expect("validated on construction"),
            self.team_index(&m.away).expect("validated on construction"),
        )
    }

    /// Played matches passing `keep`, as index triples for the likelihood.
    pub fn indexed_results<F>(&self, keep: F) -> Vec<crate::model::IndexedMatch>
    where
        F: Fn(&MatchRecord) -> bool,
    {
        self.matches
            .iter()
            .filter(|m| keep(m))
            .filter_map(|m| {
                let (home, away) = self.sides(m);
                m.outcome.map(|outcome| crate::model::IndexedMatch { home, away, outcome })
            })
            .collect()
    }
}

fn format_f64(x: f64) -> String {
    // Shortest representation that parses back to the same bits; keeps
    // emitted files deterministic and round-trippable.
    format!("{x}")
}

/// Write retained draws as a flat CSV: `chain,iter,s_1..s_n,delta,h,beta,gamma`.
/// `iter` is the absolute sweep number within the chain; `beta` is blank under
/// the zero system. Chains are numbered from 1.
pub fn write_draws_csv(path: impl AsRef<Path>, draws: &PosteriorDraws) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);

    let n = draws.n_teams;
    let mut header: Vec<String> = vec!["chain".into(), "iter".into()];
    header.extend((1..=n).map(|i| format!("s_{i}")));
    header.extend(["delta", "h", "beta", "gamma"].map(String::from));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;

    let burnin = draws.config.n_burnin;
    let thin = draws.config.thin;
    for (c, chain) in draws.chains.iter().enumerate() {
        for (k, state) in chain.draws.iter().enumerate() {
            let iter = burnin + (k + 1) * thin;
            let mut row: Vec<String> = vec![(c + 1).to_string(), iter.to_string()];
            row.extend(state.s.iter().map(|&x| format_f64(x)));
            row.push(format_f64(state.delta));
            row.push(format_f64(state.h));
            row.push(state.beta.map(format_f64).unwrap_or_default());
            row.push(format_f64(state.gamma_s));
            w.write_record(&row).map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Parsed contents of a draws CSV.
#[derive(Debug, Clone)]
pub struct DrawsFile {
    pub n_teams: usize,
    /// Chains in order of first appearance in the file.
    pub chains: Vec<Vec<ParamState>>,
}

impl DrawsFile {
    pub fn pooled(&self) -> Vec<&ParamState> {
        self.chains.iter().flatten().collect()
    }
}

/// Read a draws CSV written by [`write_draws_csv`].
pub fn read_draws_csv(path: impl AsRef<Path>) -> Result<DrawsFile> {
    let path = path.as_ref();
    let contents = read_to_string(path)?;
    let mut reader = csv_reader(&contents);
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let n = cols.len().saturating_sub(6);
    let mut expected: Vec<String> = vec!["chain".into(), "iter".into()];
    expected.extend((1..=n).map(|i| format!("s_{i}")));
    expected.extend(["delta", "h", "beta", "gamma"].map(String::from));
    if n == 0 || cols != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::parse(
            path,
            1,
            "bad draws header: expected chain,iter,s_1..s_n,delta,h,beta,gamma",
        ));
    }

    let mut chain_order: Vec<u64> = Vec::new();
    let mut by_chain: HashMap<u64, Vec<ParamState>> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let perr = |name: &str, value: &str| {
            Error::parse(path, line, format!("bad {name} value '{value}'"))
        };
        let get = |ix: usize, name: &str| field(path, &record, ix, name);
        let chain: u64 = {
            let raw = get(0, "chain")?;
            raw.parse().map_err(|_| perr("chain", raw))?
        };
        let _iter: u64 = {
            let raw = get(1, "iter")?;
            raw.parse().map_err(|_| perr("iter", raw))?
        };
        let mut s = Vec::with_capacity(n);
        for i in 0..n {
            let name = format!("s_{}", i + 1);
            let raw = get(2 + i, &name)?;
            s.push(raw.parse::<f64>().map_err(|_| perr(&name, raw))?);
        }
        let delta: f64 = {
            let raw = get(2 + n, "delta")?;
            raw.parse().map_err(|_| perr("delta", raw))?
        };
        let h: f64 = {
            let raw = get(3 + n, "h")?;
            raw.parse().map_err(|_| perr("h", raw))?
        };
        let beta = {
            let raw = get(4 + n, "beta")?;
            if raw.is_empty() {
                None
            } else {
                Some(raw.parse::<f64>().map_err(|_| perr("beta", raw))?)
            }
        };
        let gamma_s: f64 = {
            let raw = get(5 + n, "gamma")?;
            raw.parse().map_err(|_| perr("gamma", raw))?
        };
        if delta <= 0.0 {
            return Err(Error::validation(format!(
                "{}:{line}: draw has delta {delta} <= 0",
                path.display()
            )));
        }
        if !by_chain.contains_key(&chain) {
            chain_order.push(chain);
        }
        by_chain
            .entry(chain)
            .or_default()
            .push(ParamState { s, delta, h, beta, gamma_s });
    }
    if chain_order.is_empty() {
        return Err(Error::validation(format!("{}: no draws", path.display())));
    }
    let chains = chain_order
        .into_iter()
        .map(|c| by_chain.remove(&c).expect("keyed by chain_order"))
        .collect();
    Ok(DrawsFile { n_teams: n, chains })
}

/// Write forecasts: `match_id,home,away,p_win,p_draw,p_loss,plug_p_win,plug_p_draw,plug_p_loss`.
pub fn write_forecasts_csv(path: impl AsRef<Path>, forecasts: &[Forecast]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "match_id",
        "home",
        "away",
        "p_win",
        "p_draw",
        "p_loss",
        "plug_p_win",
        "plug_p_draw",
        "plug_p_loss",
    ])
    .map_err(|e| csv_err(path, e))?;
    for f in forecasts {
        w.write_record([
            f.match_id.as_str(),
            f.home.as_str(),
            f.away.as_str(),
            &format_f64(f.predictive.p_win),
            &format_f64(f.predictive.p_draw),
            &format_f64(f.predictive.p_loss),
            &format_f64(f.plug_in.p_win),
            &format_f64(f.plug_in.p_draw),
            &format_f64(f.plug_in.p_loss),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Write the rating table: `rank,abbrev,rating,sep`.
pub fn write_ratings_csv(path: impl AsRef<Path>, entries: &[RatingEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("rank,abbrev,rating,sep\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.rank,
            e.abbrev,
            format_f64(e.rating),
            format_f64(e.sep)
        ));
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{ChainDraws, SamplerConfig};
    use std::io::Write;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const TEAM_HEADER_LINE: &str = "team_id,name,abbrev,country,pot,group,uefacr,fcwr\n";

    fn two_teams_csv() -> String {
        format!(
            "{TEAM_HEADER_LINE}29,FC Barcelona,BAR,ESP,1,H,157.605,14987\n\
             17,Manchester City,MCI,ENG,3,D,70.592,13078\n"
        )
    }

    #[test]
    fn loads_team_rows() {
        let f = write_temp(&two_teams_csv());
        let (teams, warnings) = load_teams(f.path()).unwrap();
        assert_eq!(teams.len(), 2);
        let bar = &teams[0];
        assert_eq!(bar.abbrev, "BAR");
        assert_eq!(bar.country, "ESP");
        assert_eq!(bar.pot, 1);
        assert_eq!(bar.group, 'H');
        assert!((bar.uefacr - 157.605).abs() < 1e-12);
        assert!((bar.fcwr - 14987.0).abs() < 1e-12);
        // Partial dataset: warned, not rejected.
        assert!(warnings.iter().any(|w| w.contains("2 teams")));
    }

    #[test]
    fn empty_teams_file_warns() {
        let f = write_temp("");
        let (teams, warnings) = load_teams(f.path()).unwrap();
        assert!(teams.is_empty());
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn malformed_pot_names_line() {
        let csv = format!("{TEAM_HEADER_LINE}1,Some Team,AAA,ESP,XYZ123,A,1.0,2.0\n");
        let f = write_temp(&csv);
        let err = load_teams(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2:"), "no line number in: {msg}");
        assert!(msg.contains("pot"), "field not named in: {msg}");
    }

    #[test]
    fn duplicate_abbrev_rejected() {
        let csv = format!(
            "{TEAM_HEADER_LINE}1,Team One,AAA,ESP,1,A,1.0,2.0\n2,Team Two,AAA,GER,2,B,3.0,4.0\n"
        );
        let f = write_temp(&csv);
        let err = load_teams(f.path()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    const MATCH_HEADER_LINE: &str =
        "match_id,phase,leg,date,home,away,home_goals,away_goals,outcome\n";

    fn teams_for_matches() -> Vec<Team> {
        let f = write_temp(&two_teams_csv());
        load_teams(f.path()).unwrap().0
    }

    #[test]
    fn derives_outcome_from_goals() {
        let csv = format!(
            "{MATCH_HEADER_LINE}R16-1-MCI-BAR,R16,1,2014-02-18,MCI,BAR,0,2,\n\
             X-1,GROUP,1,2013-09-17,BAR,MCI,1,1,\n"
        );
        let f = write_temp(&csv);
        let (ms, _) = load_matches(f.path(), &teams_for_matches()).unwrap();
        assert_eq!(ms[0].outcome, Some(Outcome::HomeLoss));
        assert_eq!(ms[1].outcome, Some(Outcome::Draw));
    }

    #[test]
    fn accepts_outcome_only_rows_and_fixtures() {
        let csv = format!(
            "{MATCH_HEADER_LINE}A,GROUP,1,2013-09-17,BAR,MCI,,,1\n\
             B,GROUP,1,2013-12-10,MCI,BAR,,,\n"
        );
        let f = write_temp(&csv);
        let (ms, _) = load_matches(f.path(), &teams_for_matches()).unwrap();
        assert_eq!(ms[0].outcome, Some(Outcome::HomeWin));
        assert!(ms[1].is_fixture());
    }

    #[test]
    fn rejects_goal_outcome_contradiction() {
        let csv = format!("{MATCH_HEADER_LINE}A,R16,1,2014-02-18,MCI,BAR,0,2,1\n");
        let f = write_temp(&csv);
        let err = load_matches(f.path(), &teams_for_matches()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("contradicts"));
    }

    #[test]
    fn rejects_half_given_goals() {
        let csv = format!("{MATCH_HEADER_LINE}A,R16,1,2014-02-18,MCI,BAR,2,,\n");
        let f = write_temp(&csv);
        assert!(matches!(
            load_matches(f.path(), &teams_for_matches()).unwrap_err(),
            Error::Parse { .. }
        ));
    }

    #[test]
    fn rejects_unknown_team_and_self_play() {
        let teams = teams_for_matches();
        let csv = format!("{MATCH_HEADER_LINE}A,R16,1,2014-02-18,ZZZ,BAR,0,2,\n");
        let err = load_matches(write_temp(&csv).path(), &teams).unwrap_err();
        assert!(err.to_string().contains("ZZZ"));
        let csv = format!("{MATCH_HEADER_LINE}A,R16,1,2014-02-18,BAR,BAR,0,2,\n");
        assert!(load_matches(write_temp(&csv).path(), &teams).is_err());
    }

    #[test]
    fn rejects_two_legged_final_and_duplicate_group_pairing() {
        let teams = teams_for_matches();
        let csv = format!("{MATCH_HEADER_LINE}F,FINAL,2,2014-05-24,BAR,MCI,1,1,\n");
        assert!(load_matches(write_temp(&csv).path(), &teams).is_err());
        let csv = format!(
            "{MATCH_HEADER_LINE}A,GROUP,1,2013-09-17,BAR,MCI,1,0,\n\
             B,GROUP,2,2013-12-10,BAR,MCI,2,0,\n"
        );
        let err = load_matches(write_temp(&csv).path(), &teams).unwrap_err();
        assert!(err.to_string().contains("more than once"));
    }

    #[test]
    fn priors_round_trip_and_validation() {
        let json = r#"{
            "system": "FCWR",
            "delta": {"mean": 0.335, "var": 0.003333},
            "h": {"mean": 0.225, "var": 0.01},
            "beta": {"mean": 0.430, "var": 0.008333},
            "gamma": {"mean": -2.00, "var": 0.434783}
        }"#;
        let (priors, warnings) = load_priors(write_temp(json).path()).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(priors.system, RatingSystem::Fcwr);
        assert!((priors.delta.mean - 0.335).abs() < 1e-12);
        assert!((priors.beta.unwrap().var - 0.008333).abs() < 1e-12);

        let zero_with_beta = r#"{
            "system": "ZERO",
            "delta": {"mean": 0.335, "var": 0.003333},
            "h": {"mean": 0.225, "var": 0.01},
            "beta": {"mean": 0.430, "var": 0.008333},
            "gamma": {"mean": -1.00, "var": 0.172712}
        }"#;
        let (priors, warnings) = load_priors(write_temp(zero_with_beta).path()).unwrap();
        assert!(priors.beta.is_none());
        assert_eq!(warnings.len(), 1);

        let bad_var = r#"{
            "system": "ZERO",
            "delta": {"mean": 0.335, "var": 0.0},
            "h": {"mean": 0.225, "var": 0.01},
            "gamma": {"mean": -1.00, "var": 0.172712}
        }"#;
        assert!(load_priors(write_temp(bad_var).path()).is_err());

        let missing_beta = r#"{
            "system": "UEFACR",
            "delta": {"mean": 0.335, "var": 0.003333},
            "h": {"mean": 0.225, "var": 0.01},
            "gamma": {"mean": -1.13, "var": 0.2}
        }"#;
        assert!(load_priors(write_temp(missing_beta).path()).is_err());
    }

    #[test]
    fn expert_validation() {
        let good = r#"[{"match_id": "SF-2-BAY-RMA", "p_win": 0.15, "p_draw": 0.25, "p_loss": 0.60, "weight": 20}]"#;
        let ops = load_expert(write_temp(good).path()).unwrap();
        assert_eq!(ops.len(), 1);
        assert!((ops[0].weight - 20.0).abs() < 1e-12);

        let bad_sum = r#"[{"match_id": "X", "p_win": 0.5, "p_draw": 0.5, "p_loss": 0.5, "weight": 20}]"#;
        assert!(load_expert(write_temp(bad_sum).path()).is_err());

        let bad_weight = r#"[{"match_id": "X", "p_win": 0.2, "p_draw": 0.3, "p_loss": 0.5, "weight": 0}]"#;
        assert!(load_expert(write_temp(bad_weight).path()).is_err());
    }

    #[test]
    fn draws_csv_round_trip() {
        let state = |x: f64, beta: Option<f64>| ParamState {
            s: vec![x, -x],
            delta: 0.3 + x.abs() / 10.0,
            h: 0.2,
            beta,
            gamma_s: -1.0,
        };
        let config = SamplerConfig {
            n_chains: 2,
            n_iter: 8,
            n_burnin: 2,
            thin: 2,
            seed: 7,
            target_accept: 0.35,
        };
        let draws = PosteriorDraws {
            config,
            system: RatingSystem::Fcwr,
            n_teams: 2,
            chains: vec![
                ChainDraws {
                    draws: vec![state(0.111222333444555, Some(0.4)), state(-0.25, Some(0.41))],
                    accept: vec![("delta".into(), 0.3)],
                },
                ChainDraws {
                    draws: vec![state(1.0 / 3.0, Some(0.39)), state(0.5, Some(0.42))],
                    accept: vec![("delta".into(), 0.4)],
                },
            ],
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        write_draws_csv(f.path(), &draws).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "chain,iter,s_1,s_2,delta,h,beta,gamma");
        // iter = burnin + (k+1) * thin.
        assert!(lines.next().unwrap().starts_with("1,4,"));
        assert!(lines.next().unwrap().starts_with("1,6,"));
        assert!(lines.next().unwrap().starts_with("2,4,"));

        let back = read_draws_csv(f.path()).unwrap();
        assert_eq!(back.n_teams, 2);
        assert_eq!(back.chains.len(), 2);
        assert_eq!(back.chains[0], draws.chains[0].draws);
        assert_eq!(back.chains[1], draws.chains[1].draws);
    }

    #[test]
    fn draws_csv_blank_beta_for_zero_system() {
        let draws = PosteriorDraws {
            config: SamplerConfig::with_seed(1),
            system: RatingSystem::Zero,
            n_teams: 1,
            chains: vec![ChainDraws {
                draws: vec![ParamState {
                    s: vec![0.5],
                    delta: 0.3,
                    h: 0.2,
                    beta: None,
                    gamma_s: -1.0,
                }],
                accept: vec![],
            }],
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        write_draws_csv(f.path(), &draws).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",0.2,,-1"));
        let back = read_draws_csv(f.path()).unwrap();
        assert_eq!(back.chains[0][0].beta, None);
    }

    #[test]
    fn dataset_cross_references() {
        let teams = teams_for_matches();
        let csv = format!("{MATCH_HEADER_LINE}A,R16,1,2014-02-18,MCI,BAR,0,2,\n");
        let (matches, _) = load_matches(write_temp(&csv).path(), &teams).unwrap();
        let ds = Dataset::new(teams, matches).unwrap();
        assert_eq!(ds.team_index("BAR"), Some(0));
        assert_eq!(ds.team_index("MCI"), Some(1));
        let indexed = ds.indexed_results(|_| true);
        assert_eq!(indexed.len(), 1);
        assert_eq!(indexed[0].home, 1);
        assert_eq!(indexed[0].away, 0);
        assert_eq!(indexed[0].outcome, Outcome::HomeLoss);
        assert!(ds.match_by_id("A").is_some());
    }
}
