//! Subcommand implementations. Each builds a manifest while loading inputs,
//! does its work through the core crate, and writes results plus the timed
//! manifest into the output directory.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::manifest::{ConfigEcho, Manifest};
use crate::{
    AdjustArgs, BalanceArgs, DataArgs, EvaluateArgs, FitArgs, ForecastArgs, FuseArgs, RankArgs,
};

use uclf_core::adjust::AdjustmentRegistry;
use uclf_core::dataset::{self, Dataset};
use uclf_core::domain::{
    group_balance_anova, rating_correlation, standardize_ratings, AnovaResult, CorrelationResult,
    Phase, RatingSystem, StandardizedRatings, Team,
};
use uclf_core::error::Error as CoreError;
use uclf_core::expert::fuse_forecasts;
use uclf_core::forecast::{evaluate_season, forecast_match_opts, rank_teams, BrierBasis};
use uclf_core::model::PriorSet;
use uclf_core::sampler::{run_mcmc, ChainDraws, PosteriorDraws, SamplerConfig};
use uclf_core::summary::{summarize, ParamSummary};

/// A command failure carrying its process exit code: 2 for usage/validation
/// problems, 1 for runtime/numeric ones.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

/// Core errors raised while reading or validating inputs, or while computing
/// on them: everything is the caller's input's fault except numeric failures.
fn core_err(e: CoreError) -> Failure {
    match e {
        CoreError::Numeric(_) => Failure::runtime(e.to_string()),
        _ => Failure::usage(e.to_string()),
    }
}

/// Core errors raised while writing results: the inputs were fine, so
/// anything here is a runtime failure.
fn output_err(e: CoreError) -> Failure {
    Failure::runtime(e.to_string())
}

fn progress(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn warn(msg: impl AsRef<str>) {
    eprintln!("warning: {}", msg.as_ref());
}

fn ensure_out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn load_dataset(args: &DataArgs, manifest: &mut Manifest) -> Result<Dataset, Failure> {
    manifest.add_input(&args.teams)?;
    manifest.add_input(&args.matches)?;
    let (ds, warnings) = Dataset::load(&args.teams, &args.matches).map_err(core_err)?;
    for w in warnings {
        warn(w);
    }
    Ok(ds)
}

struct Setup {
    adjust_name: String,
    system: RatingSystem,
    priors: PriorSet,
    anchors: StandardizedRatings,
}

/// Resolve --adjust/--priors into a named system with priors and anchors.
fn resolve_setup(
    args: &AdjustArgs,
    teams: &[Team],
    manifest: &mut Manifest,
) -> Result<Setup, Failure> {
    let registry = AdjustmentRegistry::builtin();
    let Some(adj) = registry.get(&args.adjust) else {
        return Err(Failure::usage(format!(
            "unknown adjustment '{}'; available: {}",
            args.adjust,
            registry.names().join(", ")
        )));
    };
    let priors = match &args.priors {
        Some(path) => {
            manifest.add_input(path)?;
            let (priors, warnings) = dataset::load_priors(path).map_err(core_err)?;
            for w in warnings {
                warn(w);
            }
            if priors.system != adj.system() {
                return Err(Failure::usage(format!(
                    "{}: priors are for system {:?} but --adjust {} needs {:?}",
                    path.display(),
                    priors.system,
                    adj.name(),
                    adj.system()
                )));
            }
            priors
        }
        None => adj.default_priors(),
    };
    let anchors = adj.anchors(teams).map_err(core_err)?;
    manifest.config.adjust = Some(adj.name().to_string());
    Ok(Setup {
        adjust_name: adj.name().to_string(),
        system: adj.system(),
        priors,
        anchors,
    })
}

/// Convergence warnings worth surfacing without failing the run.
fn convergence_warnings(params: &[ParamSummary]) {
    for p in params {
        if let Some(r) = p.r_hat {
            if r > 1.05 {
                warn(format!("{}: split R-hat {r:.3} exceeds 1.05", p.name));
            }
        }
        if let Some(ess) = p.ess {
            if ess < 400.0 {
                warn(format!("{}: effective sample size {ess:.0} is below 400", p.name));
            }
        }
    }
}

/// Per-block acceptance rates, one entry per chain, keyed by block name.
fn accept_rates(draws: &PosteriorDraws) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for chain in &draws.chains {
        for (block, rate) in &chain.accept {
            out.entry(block.clone()).or_default().push(*rate);
        }
    }
    out
}

#[derive(Serialize)]
struct PosteriorFile {
    manifest: Manifest,
    system: RatingSystem,
    /// Team abbreviations in strength-index order; s_1 belongs to teams[0].
    teams: Vec<String>,
    /// Standardized anchor values, aligned with `teams`.
    anchors: Vec<f64>,
    n_matches: usize,
    n_draws: usize,
    params: Vec<ParamSummary>,
    accept_rates: BTreeMap<String, Vec<f64>>,
    /// Sidecar CSV with the retained draws; absent under --no-draws.
    draws_file: Option<String>,
}

pub fn fit(args: FitArgs, quiet: bool) -> Result<(), Failure> {
    let started = Utc::now();
    let config = args.sampler.to_config();
    let mut manifest =
        Manifest::new("fit", ConfigEcho { adjust: None, sampler: Some(config) });
    let ds = load_dataset(&args.data, &mut manifest)?;
    let setup = resolve_setup(&args.adjust, &ds.teams, &mut manifest)?;
    let train = ds.indexed_results(|_| true);
    if train.is_empty() {
        return Err(Failure::usage("no played matches to fit"));
    }
    progress(
        quiet,
        format!(
            "fit[{}]: {} matches, {} chains x {} sweeps, seed {}",
            setup.adjust_name,
            train.len(),
            config.n_chains,
            config.n_iter,
            config.seed
        ),
    );
    let draws =
        run_mcmc(&train, ds.n_teams(), &setup.priors, &setup.anchors, &config).map_err(core_err)?;
    let summary = summarize(&draws).map_err(core_err)?;
    convergence_warnings(&summary.params);

    ensure_out_dir(&args.out.out)?;
    let draws_file = (!args.no_draws).then(|| "draws.csv".to_string());
    if let Some(name) = &draws_file {
        dataset::write_draws_csv(args.out.out.join(name), &draws).map_err(output_err)?;
    }
    let posterior = PosteriorFile {
        manifest: manifest.clone(),
        system: setup.system,
        teams: ds.teams.iter().map(|t| t.abbrev.clone()).collect(),
        anchors: setup.anchors.values.clone(),
        n_matches: train.len(),
        n_draws: summary.n_draws,
        params: summary.params,
        accept_rates: accept_rates(&draws),
        draws_file,
    };
    write_json(&args.out.out.join("posterior.json"), &posterior)?;
    write_json(&args.out.out.join("manifest.json"), &manifest.with_timing(started))?;
    progress(quiet, format!("fit: wrote {}", args.out.out.join("posterior.json").display()));
    Ok(())
}

/// The parts of posterior.json the forecast command needs back.
#[derive(Deserialize)]
struct PosteriorHead {
    system: RatingSystem,
    teams: Vec<String>,
    draws_file: Option<String>,
    #[serde(default)]
    manifest: Option<ManifestHead>,
}

#[derive(Deserialize)]
struct ManifestHead {
    #[serde(default)]
    config: ConfigHead,
}

#[derive(Deserialize, Default)]
struct ConfigHead {
    #[serde(default)]
    sampler: Option<SamplerConfig>,
}

struct Fixture {
    match_id: String,
    home: String,
    away: String,
}

/// Fixtures: any CSV with match_id, home and away columns; extra columns
/// (dates, results) are ignored so a full season file works as-is.
fn read_fixtures(path: &Path) -> Result<Vec<Fixture>, Failure> {
    let contents = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().from_reader(contents.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| headers.iter().position(|f| f.trim() == name);
    let (Some(id_ix), Some(home_ix), Some(away_ix)) =
        (col("match_id"), col("home"), col("away"))
    else {
        return Err(Failure::usage(format!(
            "{}: fixtures need match_id, home and away columns",
            path.display()
        )));
    };
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let get = |ix: usize, name: &str| -> Result<String, Failure> {
            let raw = record.get(ix).map(str::trim).unwrap_or("");
            if raw.is_empty() {
                return Err(Failure::usage(format!(
                    "{}:{}: empty {name}",
                    path.display(),
                    i + 2
                )));
            }
            Ok(raw.to_string())
        };
        out.push(Fixture {
            match_id: get(id_ix, "match_id")?,
            home: get(home_ix, "home")?,
            away: get(away_ix, "away")?,
        });
    }
    Ok(out)
}

pub fn forecast(args: ForecastArgs, quiet: bool) -> Result<(), Failure> {
    let started = Utc::now();
    let mut manifest =
        Manifest::new("forecast", ConfigEcho { adjust: None, sampler: None });
    manifest.add_input(&args.posterior)?;
    manifest.add_input(&args.fixtures)?;

    let text = fs::read_to_string(&args.posterior)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.posterior.display())))?;
    let head: PosteriorHead = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.posterior.display())))?;
    let Some(draws_name) = &head.draws_file else {
        return Err(Failure::usage(format!(
            "{}: the fit ran with --no-draws, so there are no draws to forecast from; \
             refit without --no-draws",
            args.posterior.display()
        )));
    };
    let draws_path: PathBuf = args
        .posterior
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(draws_name);
    if !draws_path.exists() {
        return Err(Failure::usage(format!(
            "{}: draws sidecar '{}' not found next to the posterior file",
            args.posterior.display(),
            draws_path.display()
        )));
    }
    manifest.add_input(&draws_path)?;
    let file = dataset::read_draws_csv(&draws_path).map_err(core_err)?;
    if file.n_teams != head.teams.len() {
        return Err(Failure::usage(format!(
            "{}: {} strength columns but the posterior lists {} teams",
            draws_path.display(),
            file.n_teams,
            head.teams.len()
        )));
    }
    let config = head
        .manifest
        .and_then(|m| m.config.sampler)
        .unwrap_or(SamplerConfig {
            n_chains: file.chains.len(),
            n_iter: 0,
            n_burnin: 0,
            thin: 1,
            seed: 0,
            target_accept: 0.35,
        });
    let n_teams = file.n_teams;
    let draws = PosteriorDraws {
        config,
        system: head.system,
        n_teams,
        chains: file
            .chains
            .into_iter()
            .map(|draws| ChainDraws { draws, accept: vec![] })
            .collect(),
    };

    let fixtures = read_fixtures(&args.fixtures)?;
    let index: HashMap<&str, usize> = head
        .teams
        .iter()
        .enumerate()
        .map(|(i, ab)| (ab.as_str(), i))
        .collect();
    let neutral: HashSet<&str> = args.neutral.iter().map(String::as_str).collect();
    for id in &neutral {
        if !fixtures.iter().any(|f| f.match_id == *id) {
            warn(format!("--neutral {id} matches no fixture; ignored"));
        }
    }
    let mut forecasts = Vec::with_capacity(fixtures.len());
    for f in &fixtures {
        let side = |ab: &str| {
            index.get(ab).copied().ok_or_else(|| {
                Failure::usage(format!(
                    "fixture '{}' references team '{ab}' not present in the fit",
                    f.match_id
                ))
            })
        };
        let (home, away) = (side(&f.home)?, side(&f.away)?);
        forecasts.push(
            forecast_match_opts(
                &draws,
                &f.match_id,
                &f.home,
                &f.away,
                home,
                away,
                neutral.contains(f.match_id.as_str()),
            )
            .map_err(core_err)?,
        );
    }

    ensure_out_dir(&args.out.out)?;
    let out_path = args.out.out.join("forecasts.csv");
    dataset::write_forecasts_csv(&out_path, &forecasts).map_err(output_err)?;
    write_json(&args.out.out.join("manifest.json"), &manifest.with_timing(started))?;
    progress(
        quiet,
        format!("forecast: {} fixtures -> {}", forecasts.len(), out_path.display()),
    );
    Ok(())
}

#[derive(Serialize)]
struct EvaluationFile {
    manifest: Manifest,
    system: RatingSystem,
    phases: Vec<uclf_core::forecast::PhaseRow>,
    per_match: Vec<uclf_core::forecast::ScoredForecast>,
    notes: Vec<String>,
}

pub fn evaluate(args: EvaluateArgs, quiet: bool) -> Result<(), Failure> {
    let started = Utc::now();
    let config = args.sampler.to_config();
    let mut manifest =
        Manifest::new("evaluate", ConfigEcho { adjust: None, sampler: Some(config) });
    let ds = load_dataset(&args.data, &mut manifest)?;
    let setup = resolve_setup(&args.adjust, &ds.teams, &mut manifest)?;
    let basis = if args.brier_at_theta_mean {
        BrierBasis::AtParamMean
    } else {
        BrierBasis::PredictiveMean
    };
    progress(
        quiet,
        format!(
            "evaluate[{}]: one fit per stage, {} chains x {} sweeps each, seed {}",
            setup.adjust_name, config.n_chains, config.n_iter, config.seed
        ),
    );
    let report =
        evaluate_season(&ds, &setup.priors, &setup.anchors, &config, basis).map_err(core_err)?;
    if !quiet {
        for row in &report.rows {
            match (row.brier, row.accuracy) {
                (Some(b), Some(a)) => progress(
                    quiet,
                    format!("evaluate: {:<12} n={:<3} brier={b:.3} accuracy={a:.3}", row.label, row.n),
                ),
                _ => progress(quiet, format!("evaluate: {:<12} n=0", row.label)),
            }
        }
    }
    ensure_out_dir(&args.out.out)?;
    let out = EvaluationFile {
        manifest: manifest.clone(),
        system: report.system,
        phases: report.rows,
        per_match: report.matches,
        notes: report.notes,
    };
    write_json(&args.out.out.join("evaluation.json"), &out)?;
    write_json(&args.out.out.join("manifest.json"), &manifest.with_timing(started))?;
    progress(
        quiet,
        format!("evaluate: wrote {}", args.out.out.join("evaluation.json").display()),
    );
    Ok(())
}

pub fn rank(args: RankArgs, quiet: bool) -> Result<(), Failure> {
    let started = Utc::now();
    let config = args.sampler.to_config();
    let mut manifest = Manifest::new(
        "rank",
        ConfigEcho { adjust: Some("zero".to_string()), sampler: Some(config) },
    );
    let ds = load_dataset(&args.data, &mut manifest)?;
    progress(
        quiet,
        format!(
            "rank: unanchored fit on {} teams, {} chains x {} sweeps, seed {}",
            ds.n_teams(),
            config.n_chains,
            config.n_iter,
            config.seed
        ),
    );
    let entries = rank_teams(&ds, &config).map_err(core_err)?;
    for e in &entries {
        if e.low_information {
            warn(format!("{}: no played matches; rating is prior-driven", e.abbrev));
        }
    }
    ensure_out_dir(&args.out.out)?;
    let out_path = args.out.out.join("ratings.csv");
    dataset::write_ratings_csv(&out_path, &entries).map_err(output_err)?;
    write_json(&args.out.out.join("manifest.json"), &manifest.with_timing(started))?;
    progress(quiet, format!("rank: wrote {}", out_path.display()));
    Ok(())
}

/// Parse "PHASE" or "PHASE:LEG" into a stage key (group legs collapse to 0).
fn parse_stage(spec: &str) -> Result<(Phase, u8), Failure> {
    let (phase_str, leg) = match spec.split_once(':') {
        Some((p, l)) => {
            let leg: u8 = l
                .parse()
                .ok()
                .filter(|l| (1..=2).contains(l))
                .ok_or_else(|| Failure::usage(format!("bad leg '{l}' in --cutoff {spec}")))?;
            (p, leg)
        }
        None => (spec, 1),
    };
    let phase: Phase = phase_str.parse().map_err(core_err)?;
    Ok(match phase {
        Phase::Group => (Phase::Group, 0),
        p => (p, leg),
    })
}

pub fn fuse(args: FuseArgs, quiet: bool) -> Result<(), Failure> {
    let started = Utc::now();
    let config = args.sampler.to_config();
    let mut manifest =
        Manifest::new("fuse", ConfigEcho { adjust: None, sampler: Some(config) });
    let ds = load_dataset(&args.data, &mut manifest)?;
    let setup = resolve_setup(&args.adjust, &ds.teams, &mut manifest)?;
    manifest.add_input(&args.expert)?;
    let opinions = dataset::load_expert(&args.expert).map_err(core_err)?;
    for op in &opinions {
        for w in op.warnings() {
            warn(w);
        }
    }

    let cutoff: NaiveDate = match (&args.cutoff, &args.cutoff_date) {
        (Some(spec), None) => {
            let key = parse_stage(spec)?;
            ds.matches
                .iter()
                .filter(|m| {
                    let mk = match m.phase {
                        Phase::Group => (Phase::Group, 0),
                        p => (p, m.leg),
                    };
                    mk == key
                })
                .map(|m| m.date)
                .min()
                .ok_or_else(|| {
                    Failure::usage(format!("no matches in cutoff stage '{spec}'"))
                })?
        }
        (None, Some(d)) => NaiveDate::parse_from_str(d, "%Y-%m-%d")
            .map_err(|e| Failure::usage(format!("bad --cutoff-date '{d}': {e}")))?,
        (None, None) => {
            return Err(Failure::usage("one of --cutoff or --cutoff-date is required"))
        }
        (Some(_), Some(_)) => unreachable!("clap forbids the combination"),
    };

    let train = ds.indexed_results(|m| m.date < cutoff);
    let target_ids: Vec<String> = ds
        .matches
        .iter()
        .filter(|m| m.date >= cutoff)
        .map(|m| m.match_id.clone())
        .collect();
    if target_ids.is_empty() {
        return Err(Failure::usage(format!(
            "cutoff {cutoff} leaves no matches to forecast"
        )));
    }
    progress(
        quiet,
        format!(
            "fuse[{}]: training on {} matches before {cutoff}, forecasting {} with {} opinions, seed {}",
            setup.adjust_name,
            train.len(),
            target_ids.len(),
            opinions.len(),
            config.seed
        ),
    );
    let (forecasts, warnings) = fuse_forecasts(
        &ds,
        &train,
        &target_ids,
        &opinions,
        &setup.priors,
        &setup.anchors,
        &config,
    )
    .map_err(core_err)?;
    for w in warnings {
        warn(w);
    }

    ensure_out_dir(&args.out.out)?;
    let out_path = args.out.out.join("forecasts.csv");
    dataset::write_forecasts_csv(&out_path, &forecasts).map_err(output_err)?;
    write_json(&args.out.out.join("manifest.json"), &manifest.with_timing(started))?;
    progress(quiet, format!("fuse: wrote {}", out_path.display()));
    Ok(())
}

#[derive(Serialize)]
struct BalanceFile {
    manifest: Manifest,
    uefacr: AnovaResult,
    fcwr: AnovaResult,
    correlation: CorrelationResult,
}

pub fn balance(args: BalanceArgs, quiet: bool) -> Result<(), Failure> {
    let started = Utc::now();
    let mut manifest =
        Manifest::new("balance", ConfigEcho { adjust: None, sampler: None });
    manifest.add_input(&args.teams)?;
    let (teams, warnings) = dataset::load_teams(&args.teams).map_err(core_err)?;
    for w in warnings {
        warn(w);
    }
    let anova_for = |system: RatingSystem| -> Result<AnovaResult, Failure> {
        let std = standardize_ratings(&teams, system).map_err(core_err)?;
        group_balance_anova(&std, &teams).map_err(core_err)
    };
    let uefacr = anova_for(RatingSystem::Uefacr)?;
    let fcwr = anova_for(RatingSystem::Fcwr)?;
    let correlation = rating_correlation(&teams).map_err(core_err)?;
    progress(
        quiet,
        format!(
            "balance: F_uefacr={:.3} F_fcwr={:.3} r={:.3} ci95=({:.3}, {:.3})",
            uefacr.f, fcwr.f, correlation.r, correlation.ci95.0, correlation.ci95.1
        ),
    );
    ensure_out_dir(&args.out.out)?;
    let out = BalanceFile { manifest: manifest.clone(), uefacr, fcwr, correlation };
    write_json(&args.out.out.join("balance.json"), &out)?;
    write_json(&args.out.out.join("manifest.json"), &manifest.with_timing(started))?;
    progress(
        quiet,
        format!("balance: wrote {}", args.out.out.join("balance.json").display()),
    );
    Ok(())
}
