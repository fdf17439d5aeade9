//! Convergence diagnostics: split-half R-hat and autocorrelation-based
//! effective sample size with paired truncation at the first non-positive
//! autocorrelation pair.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sampler::PosteriorDraws;
use crate::stats;

/// Longest autocorrelation lag examined per parameter.
const MAX_LAG: usize = 2000;

/// Diagnostics for one scalar parameter.
#[derive(Debug, Clone, Copy)]
pub struct ParamDiag {
    /// Split-half potential scale reduction; NaN when variation is absent,
    /// infinite when chains are internally constant but disagree.
    pub r_hat: f64,
    /// Effective sample size across all split sequences; NaN when undefined.
    pub ess: f64,
    /// Set when the parameter shows no variation at all.
    pub insufficient_variation: bool,
}

/// Compute R-hat and ESS for every scalar parameter.
///
/// Each chain is halved, giving 2C sequences; a single chain is therefore
/// still diagnosable. Fewer than 10 retained draws in total is an error.
pub fn diagnostics(draws: &PosteriorDraws) -> Result<BTreeMap<String, ParamDiag>> {
    let total = draws.n_retained();
    if total < 10 {
        return Err(Error::validation(format!(
            "diagnostics need at least 10 retained draws, have {total}"
        )));
    }
    let mut out = BTreeMap::new();
    for name in draws.param_names() {
        let series = draws
            .chain_series(&name)
            .expect("param_names only yields extractable names");
        out.insert(name, diagnose_param(&series));
    }
    Ok(out)
}

fn diagnose_param(chains: &[Vec<f64>]) -> ParamDiag {
    // Split each chain into halves of equal length m.
    let mut seqs: Vec<&[f64]> = Vec::with_capacity(chains.len() * 2);
    let m = chains.iter().map(|c| c.len() / 2).min().unwrap_or(0);
    if m < 2 {
        return ParamDiag { r_hat: f64::NAN, ess: f64::NAN, insufficient_variation: true };
    }
    for c in chains {
        let half = c.len() / 2;
        seqs.push(&c[..half]);
        seqs.push(&c[half..2 * half]);
    }
    // Truncate all sequences to the common length m so moments are balanced.
    let seqs: Vec<&[f64]> = seqs.into_iter().map(|s| &s[..m]).collect();

    // Constancy must be detected exactly; summation rounding would otherwise
    // turn a flat sequence into a hair of spurious variance.
    let is_const = |s: &[f64]| s.iter().all(|&x| x == s[0]);
    let means: Vec<f64> =
        seqs.iter().map(|s| if is_const(s) { s[0] } else { stats::mean(s) }).collect();
    let vars: Vec<f64> = seqs
        .iter()
        .map(|s| {
            if is_const(s) {
                0.0
            } else {
                let v = stats::sd(s);
                v * v
            }
        })
        .collect();
    let w = stats::mean(&vars);
    let var_means = {
        let sd = stats::sd(&means);
        sd * sd
    };
    let m_f = m as f64;
    let var_plus = w * (m_f - 1.0) / m_f + var_means;

    if var_plus <= 0.0 {
        return ParamDiag { r_hat: f64::NAN, ess: f64::NAN, insufficient_variation: true };
    }
    if w == 0.0 {
        // Internally constant but disagreeing sequences: divergence is
        // unbounded, ESS undefined.
        return ParamDiag { r_hat: f64::INFINITY, ess: f64::NAN, insufficient_variation: false };
    }
    let r_hat = (var_plus / w).sqrt();

    // ESS with Geyer-style pairing: accumulate rho(2k) + rho(2k+1) while
    // positive, enforcing monotone non-increase, up to the lag cap.
    let mean_acov = |lag: usize| -> f64 {
        let mut acc = 0.0;
        for (seq, mean) in seqs.iter().zip(&means) {
            let mut c = 0.0;
            for i in 0..(m - lag) {
                c += (seq[i] - mean) * (seq[i + lag] - mean);
            }
            acc += c / m_f;
        }
        acc / seqs.len() as f64
    };
    let rho = |lag: usize| 1.0 - (w - mean_acov(lag)) / var_plus;

    let cap = (m - 1).min(MAX_LAG);
    let mut pair_sum = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 <= cap {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        pair_sum += pair;
        prev_pair = pair;
        lag += 2;
    }
    let n_total = (seqs.len() * m) as f64;
    let tau = (2.0 * pair_sum - 1.0).max(1.0 / n_total.log10());
    let ess = n_total / tau;
    ParamDiag { r_hat, ess, insufficient_variation: false }
}
