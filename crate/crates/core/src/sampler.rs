//! Adaptive random-walk Metropolis-within-Gibbs sampler.
//!
//! One sweep updates each team strength singly, then the cut-off, the home
//! effect, the regression coefficient (when anchored), and the log strength
//! SD. Step sizes adapt toward a target acceptance rate during burn-in only,
//! so the post-burn-in kernel is a fixed, valid Metropolis chain.
//!
//! The likelihood is a sum of weighted terms: an observed match contributes
//! one-hot weights (its log outcome probability), and opinion-fusion terms
//! carry fractional weights. Per-term latent means and log contributions are
//! cached so a single-strength update touches only that team's terms.
//!
//! Chains are deterministic given (seed, chain index): each chain owns its
//! own counter-based RNG stream, so serial and parallel execution produce
//! bit-identical draws. `UCLF_THREADS` caps chain parallelism.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::{RatingSystem, StandardizedRatings};
use crate::error::{Error, Result};
use crate::model::{probs_from_mu, IndexedMatch, ParamState, PriorSet};
use crate::normal::normal_logpdf;

/// Robbins-Monro gain for log-step adaptation.
const ADAPT_GAIN: f64 = 3.0;
/// Decay exponent for the adaptation schedule.
const ADAPT_DECAY: f64 = 0.6;

/// Run-length and reproducibility settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_chains: usize,
    /// Total sweeps per chain, burn-in included.
    pub n_iter: usize,
    pub n_burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub target_accept: f64,
}

impl SamplerConfig {
    /// Defaults sized for a full-season fit in minutes; the seed is the only
    /// setting without a sensible default.
    pub fn with_seed(seed: u64) -> Self {
        SamplerConfig {
            n_chains: 4,
            n_iter: 20_000,
            n_burnin: 10_000,
            thin: 1,
            seed,
            target_accept: 0.35,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains < 1 {
            return Err(Error::validation("n_chains must be at least 1"));
        }
        if self.n_iter == 0 || self.thin == 0 {
            return Err(Error::validation("n_iter and thin must be positive"));
        }
        if self.n_burnin >= self.n_iter {
            return Err(Error::validation(format!(
                "n_burnin {} must be below n_iter {}",
                self.n_burnin, self.n_iter
            )));
        }
        if self.retained_per_chain() == 0 {
            return Err(Error::validation(format!(
                "thin {} leaves no retained draws from {} post-burn-in sweeps",
                self.thin,
                self.n_iter - self.n_burnin
            )));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::validation(format!(
                "target_accept {} must lie in (0,1)",
                self.target_accept
            )));
        }
        Ok(())
    }

    pub fn retained_per_chain(&self) -> usize {
        (self.n_iter - self.n_burnin) / self.thin
    }
}

/// One weighted log-probability term: contributes
/// sum_k weights[k] * log p_k(mu, delta) to the log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodTerm {
    pub home: usize,
    pub away: usize,
    pub weights: [f64; 3],
}

impl LikelihoodTerm {
    /// Term for an observed outcome: one-hot weights.
    pub fn observed(m: &IndexedMatch) -> Self {
        let mut weights = [0.0; 3];
        weights[m.outcome.index()] = 1.0;
        LikelihoodTerm { home: m.home, away: m.away, weights }
    }
}

/// Retained draws and post-burn-in acceptance rates of a single chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    pub draws: Vec<ParamState>,
    /// (block name, acceptance rate) per update block.
    pub accept: Vec<(String, f64)>,
}

/// Output of a sampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub config: SamplerConfig,
    pub system: RatingSystem,
    pub n_teams: usize,
    pub chains: Vec<ChainDraws>,
}

impl PosteriorDraws {
    pub fn n_retained(&self) -> usize {
        self.chains.iter().map(|c| c.draws.len()).sum()
    }

    pub fn pooled(&self) -> Vec<&ParamState> {
        self.chains.iter().flat_map(|c| &c.draws).collect()
    }

    pub fn has_beta(&self) -> bool {
        self.system != RatingSystem::Zero
    }

    /// Scalar parameter names in draw order: s_1..s_n, delta, h, beta?, gamma.
    pub fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.n_teams).map(|i| format!("s_{i}")).collect();
        names.push("delta".into());
        names.push("h".into());
        if self.has_beta() {
            names.push("beta".into());
        }
        names.push("gamma".into());
        names
    }

    /// Per-chain series of one scalar parameter.
    pub fn chain_series(&self, name: &str) -> Option<Vec<Vec<f64>>> {
        let extract: Box<dyn Fn(&ParamState) -> Option<f64>> = match name {
            "delta" => Box::new(|d: &ParamState| Some(d.delta)),
            "h" => Box::new(|d: &ParamState| Some(d.h)),
            "beta" => Box::new(|d: &ParamState| d.beta),
            "gamma" => Box::new(|d: &ParamState| Some(d.gamma_s)),
            _ => {
                let ix: usize = name.strip_prefix("s_")?.parse().ok()?;
                if ix == 0 || ix > self.n_teams {
                    return None;
                }
                Box::new(move |d: &ParamState| d.s.get(ix - 1).copied())
            }
        };
        self.chains
            .iter()
            .map(|c| c.draws.iter().map(|d| extract(d)).collect::<Option<Vec<f64>>>())
            .collect()
    }
}

/// Sample the posterior given observed matches.
pub fn run_mcmc(
    matches: &[IndexedMatch],
    n_teams: usize,
    priors: &PriorSet,
    std: &StandardizedRatings,
    config: &SamplerConfig,
) -> Result<PosteriorDraws> {
    let terms: Vec<LikelihoodTerm> = matches.iter().map(LikelihoodTerm::observed).collect();
    run_mcmc_terms(&terms, n_teams, priors, std, config)
}

/// Sample the posterior for an arbitrary weighted-term likelihood.
/// Thread count comes from `UCLF_THREADS` (default: one thread per chain).
pub fn run_mcmc_terms(
    terms: &[LikelihoodTerm],
    n_teams: usize,
    priors: &PriorSet,
    std: &StandardizedRatings,
    config: &SamplerConfig,
) -> Result<PosteriorDraws> {
    let threads = std::env::var("UCLF_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(config.n_chains.max(1));
    run_mcmc_threads(terms, n_teams, priors, std, config, threads)
}

/// Same as [`run_mcmc_terms`] with an explicit thread cap. Results are
/// bit-identical for every `threads` value.
pub fn run_mcmc_threads(
    terms: &[LikelihoodTerm],
    n_teams: usize,
    priors: &PriorSet,
    std: &StandardizedRatings,
    config: &SamplerConfig,
    threads: usize,
) -> Result<PosteriorDraws> {
    if n_teams == 0 {
        return Err(Error::validation("empty team set"));
    }
    config.validate()?;
    priors.validate()?;
    if std.system != priors.system {
        return Err(Error::validation(format!(
            "anchor system {} does not match prior system {}",
            std.system, priors.system
        )));
    }
    if std.values.len() != n_teams {
        return Err(Error::validation(format!(
            "{} anchor values for {} teams",
            std.values.len(),
            n_teams
        )));
    }
    for (i, t) in terms.iter().enumerate() {
        if t.home >= n_teams || t.away >= n_teams {
            return Err(Error::validation(format!(
                "term {i} references team index outside 0..{n_teams}"
            )));
        }
        if t.home == t.away {
            return Err(Error::validation(format!("term {i}: a team cannot play itself")));
        }
        if t.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::validation(format!("term {i}: non-finite weight")));
        }
    }

    let threads = threads.max(1);
    let n_chains = config.n_chains;
    let mut chains: Vec<Option<Result<ChainDraws>>> = (0..n_chains).map(|_| None).collect();
    std::thread::scope(|scope| {
        for batch in (0..n_chains).collect::<Vec<_>>().chunks(threads) {
            let mut handles = Vec::with_capacity(batch.len());
            for &chain_ix in batch {
                handles.push((
                    chain_ix,
                    scope.spawn(move || run_chain(terms, n_teams, priors, std, config, chain_ix)),
                ));
            }
            for (chain_ix, handle) in handles {
                let result = match handle.join() {
                    Ok(r) => r,
                    Err(panic) => std::panic::resume_unwind(panic),
                };
                chains[chain_ix] = Some(result);
            }
        }
    });
    let chains = chains
        .into_iter()
        .map(|c| c.expect("every chain index was spawned"))
        .collect::<Result<Vec<ChainDraws>>>()?;
    Ok(PosteriorDraws {
        config: *config,
        system: priors.system,
        n_teams,
        chains,
    })
}

/// Weighted log term at latent mean `mu`. Zero weights are skipped so that
/// impossible outcomes with zero weight cannot poison the sum.
#[inline]
fn term_log(mu: f64, delta: f64, weights: &[f64; 3]) -> f64 {
    let p = probs_from_mu(mu, delta);
    let mut acc = 0.0;
    for k in 0..3 {
        let w = weights[k];
        if w != 0.0 {
            // A vanished probability with a live exponent sinks the state,
            // whatever the exponent's sign; w * ln(0) would be +inf for w < 0.
            if p[k] <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += w * p[k].ln();
        }
    }
    acc
}

struct ChainRunner<'a> {
    terms: &'a [LikelihoodTerm],
    by_team: Vec<Vec<usize>>,
    x: &'a [f64],
    priors: &'a PriorSet,
    config: &'a SamplerConfig,
    rng: ChaCha8Rng,

    // Current state.
    s: Vec<f64>,
    delta: f64,
    h: f64,
    beta: Option<f64>,
    gamma: f64,

    // Cached densities.
    mu: Vec<f64>,
    term_ll: Vec<f64>,
    total_ll: f64,
    /// Per-team strength log-prior and its running sum.
    sp: Vec<f64>,
    sp_sum: f64,

    // Adaptation and bookkeeping, one slot per block.
    log_step: Vec<f64>,
    burnin_proposals: Vec<u64>,
    post_proposals: Vec<u64>,
    post_accepts: Vec<u64>,

    // Scratch buffers to avoid per-proposal allocation.
    scratch_terms: Vec<(usize, f64, f64)>,
    scratch_ll: Vec<f64>,
    scratch_sp: Vec<f64>,
}

fn run_chain(
    terms: &[LikelihoodTerm],
    n_teams: usize,
    priors: &PriorSet,
    std: &StandardizedRatings,
    config: &SamplerConfig,
    chain_ix: usize,
) -> Result<ChainDraws> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chain_ix as u64);

    let mut by_team: Vec<Vec<usize>> = vec![Vec::new(); n_teams];
    for (t, term) in terms.iter().enumerate() {
        by_team[term.home].push(t);
        by_team[term.away].push(t);
    }

    let beta0 = priors.beta.as_ref().map(|b| b.mean);
    let s: Vec<f64> = std
        .values
        .iter()
        .map(|&xi| beta0.unwrap_or(0.0) * xi)
        .collect();
    let delta = priors.delta.mean;
    let h = priors.h.mean;
    let gamma = priors.gamma.mean;
    if delta <= 0.0 {
        return Err(Error::numeric(format!(
            "initialization failed: prior mean cut-off {delta} is not positive"
        )));
    }

    let mu: Vec<f64> = terms
        .iter()
        .map(|t| s[t.home] - s[t.away] + h)
        .collect();
    let term_ll: Vec<f64> = terms
        .iter()
        .zip(&mu)
        .map(|(t, &m)| term_log(m, delta, &t.weights))
        .collect();
    let total_ll: f64 = term_ll.iter().sum();
    let s_var = (2.0 * gamma).exp();
    let sp: Vec<f64> = s
        .iter()
        .zip(std.values.iter())
        .map(|(&si, &xi)| normal_logpdf(si, beta0.unwrap_or(0.0) * xi, s_var))
        .collect();
    let sp_sum: f64 = sp.iter().sum();

    let n_blocks = n_teams + 2 + usize::from(beta0.is_some()) + 1;
    let mut log_step = Vec::with_capacity(n_blocks);
    let s_step = gamma.exp();
    for _ in 0..n_teams {
        log_step.push(s_step.ln());
    }
    log_step.push(priors.delta.sd().ln());
    log_step.push(priors.h.sd().ln());
    if let Some(b) = &priors.beta {
        log_step.push(b.sd().ln());
    }
    log_step.push(priors.gamma.sd().ln());

    let mut runner = ChainRunner {
        terms,
        by_team,
        x: &std.values,
        priors,
        config,
        rng,
        s,
        delta,
        h,
        beta: beta0,
        gamma,
        mu,
        term_ll,
        total_ll,
        sp,
        sp_sum,
        log_step,
        burnin_proposals: vec![0; n_blocks],
        post_proposals: vec![0; n_blocks],
        post_accepts: vec![0; n_blocks],
        scratch_terms: Vec::new(),
        scratch_ll: vec![0.0; terms.len()],
        scratch_sp: vec![0.0; n_teams],
    };

    let init_density = runner.total_ll + runner.sp_sum + runner.scalar_prior();
    if !init_density.is_finite() {
        return Err(Error::numeric(format!(
            "initialization failed: log posterior density {init_density} at the starting state"
        )));
    }

    let mut draws = Vec::with_capacity(config.retained_per_chain());
    for sweep in 1..=config.n_iter {
        let adapt = sweep <= config.n_burnin;
        runner.sweep(adapt);
        if sweep > config.n_burnin && (sweep - config.n_burnin) % config.thin == 0 {
            draws.push(runner.state());
        }
    }

    let accept = runner.acceptance_rates(n_teams);
    Ok(ChainDraws { draws, accept })
}

impl ChainRunner<'_> {
    fn n_teams(&self) -> usize {
        self.x.len()
    }

    fn state(&self) -> ParamState {
        ParamState {
            s: self.s.clone(),
            delta: self.delta,
            h: self.h,
            beta: self.beta,
            gamma_s: self.gamma,
        }
    }

    /// Log-prior of the scalar blocks at the current state.
    fn scalar_prior(&self) -> f64 {
        let mut lp = normal_logpdf(self.delta, self.priors.delta.mean, self.priors.delta.var)
            + normal_logpdf(self.h, self.priors.h.mean, self.priors.h.var)
            + normal_logpdf(self.gamma, self.priors.gamma.mean, self.priors.gamma.var);
        if let (Some(b), Some(bp)) = (self.beta, &self.priors.beta) {
            lp += normal_logpdf(b, bp.mean, bp.var);
        }
        lp
    }

    fn sweep(&mut self, adapt: bool) {
        let n_blocks = self.log_step.len();
        for block in 0..n_blocks {
            let z: f64 = self.rng.sample(StandardNormal);
            let u: f64 = self.rng.gen();
            let dz = z * self.log_step[block].exp();
            let (log_alpha, accepted) = self.propose(block, dz, u);
            if adapt {
                self.burnin_proposals[block] += 1;
                let t = self.burnin_proposals[block] as f64;
                let alpha = if log_alpha.is_nan() {
                    0.0
                } else {
                    log_alpha.exp().min(1.0)
                };
                self.log_step[block] +=
                    ADAPT_GAIN * (alpha - self.config.target_accept) / (1.0 + t).powf(ADAPT_DECAY);
            } else {
                self.post_proposals[block] += 1;
                self.post_accepts[block] += u64::from(accepted);
            }
        }
    }

    /// Metropolis decision: accept iff log u < log_alpha (NaN rejects).
    fn decide(log_alpha: f64, u: f64) -> bool {
        u.ln() < log_alpha
    }

    fn propose(&mut self, block: usize, dz: f64, u: f64) -> (f64, bool) {
        let n = self.n_teams();
        if block < n {
            self.propose_strength(block, dz, u)
        } else if block == n {
            self.propose_delta(dz, u)
        } else if block == n + 1 {
            self.propose_h(dz, u)
        } else if self.beta.is_some() && block == n + 2 {
            self.propose_beta(dz, u)
        } else {
            self.propose_gamma(dz, u)
        }
    }

    fn propose_strength(&mut self, i: usize, dz: f64, u: f64) -> (f64, bool) {
        let new_si = self.s[i] + dz;
        let mut delta_ll = 0.0;
        self.scratch_terms.clear();
        for idx in 0..self.by_team[i].len() {
            let t = self.by_team[i][idx];
            let term = &self.terms[t];
            let dmu = if term.home == i { dz } else { -dz };
            let new_mu = self.mu[t] + dmu;
            let new_ll = term_log(new_mu, self.delta, &term.weights);
            delta_ll += new_ll - self.term_ll[t];
            self.scratch_terms.push((t, new_mu, new_ll));
        }
        let beta = self.beta.unwrap_or(0.0);
        let s_var = (2.0 * self.gamma).exp();
        let new_sp = normal_logpdf(new_si, beta * self.x[i], s_var);
        let log_alpha = delta_ll + new_sp - self.sp[i];
        let accepted = Self::decide(log_alpha, u);
        if accepted {
            self.s[i] = new_si;
            for &(t, m, l) in &self.scratch_terms {
                self.total_ll += l - self.term_ll[t];
                self.mu[t] = m;
                self.term_ll[t] = l;
            }
            self.sp_sum += new_sp - self.sp[i];
            self.sp[i] = new_sp;
        }
        (log_alpha, accepted)
    }

    fn propose_delta(&mut self, dz: f64, u: f64) -> (f64, bool) {
        let new_delta = self.delta + dz;
        if new_delta <= 0.0 {
            return (f64::NEG_INFINITY, false);
        }
        let mut new_total = 0.0;
        for (t, term) in self.terms.iter().enumerate() {
            let l = term_log(self.mu[t], new_delta, &term.weights);
            self.scratch_ll[t] = l;
            new_total += l;
        }
        let prior = &self.priors.delta;
        let log_alpha = new_total - self.total_ll
            + normal_logpdf(new_delta, prior.mean, prior.var)
            - normal_logpdf(self.delta, prior.mean, prior.var);
        let accepted = Self::decide(log_alpha, u);
        if accepted {
            self.delta = new_delta;
            self.term_ll.copy_from_slice(&self.scratch_ll);
            self.total_ll = new_total;
        }
        (log_alpha, accepted)
    }

    fn propose_h(&mut self, dz: f64, u: f64) -> (f64, bool) {
        let new_h = self.h + dz;
        let mut new_total = 0.0;
        for (t, term) in self.terms.iter().enumerate() {
            let l = term_log(self.mu[t] + dz, self.delta, &term.weights);
            self.scratch_ll[t] = l;
            new_total += l;
        }
        let prior = &self.priors.h;
        let log_alpha = new_total - self.total_ll
            + normal_logpdf(new_h, prior.mean, prior.var)
            - normal_logpdf(self.h, prior.mean, prior.var);
        let accepted = Self::decide(log_alpha, u);
        if accepted {
            self.h = new_h;
            for m in &mut self.mu {
                *m += dz;
            }
            self.term_ll.copy_from_slice(&self.scratch_ll);
            self.total_ll = new_total;
        }
        (log_alpha, accepted)
    }

    fn propose_beta(&mut self, dz: f64, u: f64) -> (f64, bool) {
        let beta = self.beta.expect("beta block only exists when beta is present");
        let prior = self.priors.beta.as_ref().expect("validated");
        let new_beta = beta + dz;
        let s_var = (2.0 * self.gamma).exp();
        let mut new_sum = 0.0;
        for i in 0..self.n_teams() {
            let l = normal_logpdf(self.s[i], new_beta * self.x[i], s_var);
            self.scratch_sp[i] = l;
            new_sum += l;
        }
        let log_alpha = new_sum - self.sp_sum
            + normal_logpdf(new_beta, prior.mean, prior.var)
            - normal_logpdf(beta, prior.mean, prior.var);
        let accepted = Self::decide(log_alpha, u);
        if accepted {
            self.beta = Some(new_beta);
            self.sp.copy_from_slice(&self.scratch_sp);
            self.sp_sum = new_sum;
        }
        (log_alpha, accepted)
    }

    fn propose_gamma(&mut self, dz: f64, u: f64) -> (f64, bool) {
        let new_gamma = self.gamma + dz;
        let new_var = (2.0 * new_gamma).exp();
        let beta = self.beta.unwrap_or(0.0);
        let mut new_sum = 0.0;
        for i in 0..self.n_teams() {
            let l = normal_logpdf(self.s[i], beta * self.x[i], new_var);
            self.scratch_sp[i] = l;
            new_sum += l;
        }
        let prior = &self.priors.gamma;
        let log_alpha = new_sum - self.sp_sum
            + normal_logpdf(new_gamma, prior.mean, prior.var)
            - normal_logpdf(self.gamma, prior.mean, prior.var);
        let accepted = Self::decide(log_alpha, u);
        if accepted {
            self.gamma = new_gamma;
            self.sp.copy_from_slice(&self.scratch_sp);
            self.sp_sum = new_sum;
        }
        (log_alpha, accepted)
    }

    fn acceptance_rates(&self, n_teams: usize) -> Vec<(String, f64)> {
        let mut names: Vec<String> = (1..=n_teams).map(|i| format!("s_{i}")).collect();
        names.push("delta".into());
        names.push("h".into());
        if self.beta.is_some() {
            names.push("beta".into());
        }
        names.push("gamma".into());
        names
            .into_iter()
            .enumerate()
            .map(|(b, name)| {
                let rate = if self.post_proposals[b] == 0 {
                    0.0
                } else {
                    self.post_accepts[b] as f64 / self.post_proposals[b] as f64
                };
                (name, rate)
            })
            .collect()
    }
}
