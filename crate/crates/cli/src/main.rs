//! `uclf`: file-driven workflows around the cumulative-probit match model.
//! Every subcommand reads CSV/JSON inputs, writes its results to files in
//! `--out`, and records a run manifest; progress goes to standard error.

mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use uclf_core::sampler::SamplerConfig;

#[derive(Parser)]
#[command(
    name = "uclf",
    version,
    about = "Bayesian win/draw/loss forecasting for a 32-team tournament season",
    after_help = "Results are written to files under --out; nothing but progress and \
                  warnings is printed. Set UCLF_THREADS to cap chain parallelism."
)]
struct Cli {
    /// Suppress progress output (warnings still print).
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the posterior on every played match in the input.
    ///
    /// Writes posterior.json (summaries and diagnostics), draws.csv (the
    /// retained draws, unless --no-draws), and manifest.json.
    Fit(FitArgs),
    /// Forecast fixtures from a saved fit.
    ///
    /// Reads posterior.json plus its draws.csv sidecar and writes
    /// forecasts.csv and manifest.json.
    Forecast(ForecastArgs),
    /// Refit and score the whole season phase by phase.
    ///
    /// Each stage is forecast from a fit on strictly earlier stages only
    /// (the group stage from the priors alone). Writes evaluation.json and
    /// manifest.json.
    Evaluate(EvaluateArgs),
    /// Produce the strength rating table from an unanchored fit.
    ///
    /// Writes ratings.csv and manifest.json.
    Rank(RankArgs),
    /// Forecast upcoming matches with expert opinions folded in.
    ///
    /// Trains on matches played strictly before the cutoff and forecasts the
    /// matches at or after it. Writes forecasts.csv and manifest.json.
    Fuse(FuseArgs),
    /// Check rating balance across groups and between rating systems.
    ///
    /// Writes balance.json and manifest.json.
    Balance(BalanceArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Teams CSV: team_id,name,abbrev,country,pot,group,uefacr,fcwr.
    #[arg(long, value_name = "FILE")]
    teams: PathBuf,

    /// Matches CSV: match_id,phase,leg,date,home,away,home_goals,away_goals,outcome.
    #[arg(long, value_name = "FILE")]
    matches: PathBuf,
}

#[derive(Args)]
struct AdjustArgs {
    /// Adjustment system anchoring the strength priors.
    #[arg(long, default_value = "zero", value_name = "NAME")]
    adjust: String,

    /// Priors JSON; defaults to the adjustment's built-in priors.
    /// The file's "system" field must match --adjust.
    #[arg(long, value_name = "FILE")]
    priors: Option<PathBuf>,
}

#[derive(Args)]
struct SamplerArgs {
    /// RNG seed. Required: runs are reproducible on purpose, so the seed is
    /// an explicit input rather than a hidden default.
    #[arg(long)]
    seed: u64,

    /// Number of chains.
    #[arg(long, default_value_t = 4)]
    chains: usize,

    /// Total sweeps per chain, burn-in included.
    #[arg(long, default_value_t = 20_000)]
    iters: usize,

    /// Sweeps discarded as burn-in (adaptation happens here).
    #[arg(long, default_value_t = 10_000)]
    burnin: usize,

    /// Keep every thin-th sweep after burn-in.
    #[arg(long, default_value_t = 1)]
    thin: usize,

    /// Acceptance rate the step-size adaptation aims for.
    #[arg(long, default_value_t = 0.35)]
    target_accept: f64,
}

impl SamplerArgs {
    fn to_config(&self) -> SamplerConfig {
        SamplerConfig {
            n_chains: self.chains,
            n_iter: self.iters,
            n_burnin: self.burnin,
            thin: self.thin,
            seed: self.seed,
            target_accept: self.target_accept,
        }
    }
}

#[derive(Args)]
struct OutArgs {
    /// Directory for result files; created if absent.
    #[arg(long, default_value = ".", value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    adjust: AdjustArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    out: OutArgs,

    /// Skip the draws.csv sidecar (forecasting from this fit then won't work).
    #[arg(long)]
    no_draws: bool,
}

#[derive(Args)]
struct ForecastArgs {
    /// posterior.json from a previous fit; its draws.csv sidecar must exist.
    #[arg(long, value_name = "FILE")]
    posterior: PathBuf,

    /// Fixtures CSV: match_id,home,away (the matches.csv schema also works;
    /// results in it are ignored).
    #[arg(long, value_name = "FILE")]
    fixtures: PathBuf,

    /// Treat MATCH_ID as played on neutral ground: no home effect.
    /// Repeatable.
    #[arg(long, value_name = "MATCH_ID")]
    neutral: Vec<String>,

    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    adjust: AdjustArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    out: OutArgs,

    /// Score the plug-in Brier at the posterior parameter means instead of
    /// the predictive mean probabilities.
    #[arg(long)]
    brier_at_theta_mean: bool,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct FuseArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    adjust: AdjustArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    out: OutArgs,

    /// Expert opinions JSON: [{"match_id", "p_win", "p_draw", "p_loss", "weight"}].
    #[arg(long, value_name = "FILE")]
    expert: PathBuf,

    /// Cutoff stage PHASE[:LEG] (e.g. SF:2). Training uses matches played
    /// strictly before the stage's first date; everything at or after it is
    /// forecast.
    #[arg(long, value_name = "PHASE[:LEG]", conflicts_with = "cutoff_date")]
    cutoff: Option<String>,

    /// Cutoff date YYYY-MM-DD; same split rule as --cutoff.
    #[arg(long, value_name = "DATE")]
    cutoff_date: Option<String>,
}

#[derive(Args)]
struct BalanceArgs {
    /// Teams CSV: team_id,name,abbrev,country,pot,group,uefacr,fcwr.
    #[arg(long, value_name = "FILE")]
    teams: PathBuf,

    #[command(flatten)]
    out: OutArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    let outcome = match cli.command {
        Command::Fit(args) => run::fit(args, quiet),
        Command::Forecast(args) => run::forecast(args, quiet),
        Command::Evaluate(args) => run::evaluate(args, quiet),
        Command::Rank(args) => run::rank(args, quiet),
        Command::Fuse(args) => run::fuse(args, quiet),
        Command::Balance(args) => run::balance(args, quiet),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
