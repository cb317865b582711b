//! Per-parameter posterior summaries and the point-estimate model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::HmmModel;
use crate::math::{mean, quantile_sorted};

use super::chains::PosteriorDraws;
use super::transform::from_flat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// 5% quantile.
    pub q05: f64,
    /// 95% quantile.
    pub q95: f64,
    /// Effective sample size across chains.
    pub ess: f64,
    /// Potential scale reduction; `NaN` with a single chain.
    pub rhat: f64,
}

impl ParamSummary {
    pub fn covers(&self, value: f64) -> bool {
        self.q05 <= value && value <= self.q95
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub params: Vec<ParamSummary>,
    /// Parameter-wise posterior mean with every simplex renormalized.
    pub point: HmmModel,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

fn autocovariance(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let m = mean(x);
    (0..n - lag).map(|t| (x[t] - m) * (x[t + lag] - m)).sum::<f64>() / n as f64
}

/// Effective sample size of equal-length chains, using the combined
/// autocorrelation truncated at the first negative pair sum (Geyer).
pub fn effective_sample_size(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if m == 0 || n < 4 {
        return f64::NAN;
    }
    let chain_means: Vec<f64> = chains.iter().map(|c| mean(&c[..n])).collect();
    let within: f64 = chains
        .iter()
        .map(|c| autocovariance(&c[..n], 0) * n as f64 / (n - 1) as f64)
        .sum::<f64>()
        / m as f64;
    let between = if m > 1 {
        n as f64 * crate::math::variance(&chain_means)
    } else {
        0.0
    };
    let var_plus = (n - 1) as f64 / n as f64 * within + between / n as f64;
    if !(var_plus > 0.0) {
        return (m * n) as f64;
    }
    let rho = |lag: usize| {
        let acov: f64 = chains.iter().map(|c| autocovariance(&c[..n], lag)).sum::<f64>() / m as f64;
        1.0 - (within - acov) / var_plus
    };
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair < 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    let total = (m * n) as f64;
    total / tau.max(1.0 / total.log10())
}

/// Split-free potential scale reduction factor.
pub fn rhat(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if m < 2 || n < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(&c[..n])).collect();
    let within =
        chains.iter().map(|c| crate::math::variance(&c[..n])).sum::<f64>() / m as f64;
    let between = n as f64 * crate::math::variance(&means);
    if within == 0.0 {
        return if between == 0.0 { 1.0 } else { f64::INFINITY };
    }
    (((n - 1) as f64 / n as f64 * within + between / n as f64) / within).sqrt()
}

/// Summarizes every constrained parameter. Pass relabeled draws; the point
/// model is only meaningful when labels agree across draws.
pub fn summarize(draws: &PosteriorDraws) -> Result<PosteriorSummary> {
    let total = draws.n_draws();
    if total == 0 {
        return Err(Error::Fit("no posterior draws to summarize".into()));
    }
    if !draws.relabeled {
        log::warn!("summarizing draws that have not been relabeled");
    }
    let names = draws.names();
    let mut params = Vec::with_capacity(names.len());
    let mut point = Vec::with_capacity(names.len());
    for (i, name) in names.into_iter().enumerate() {
        let per_chain: Vec<Vec<f64>> = draws
            .chains
            .iter()
            .map(|c| c.draws.iter().map(|d| d[i]).collect())
            .collect();
        let mut all: Vec<f64> = per_chain.iter().flatten().copied().collect();
        // centre on the first draw so constant columns come out exact
        let shift = all[0];
        let centred: Vec<f64> = all.iter().map(|v| v - shift).collect();
        let offset = mean(&centred);
        let mu = shift + offset;
        let sd = if all.len() > 1 {
            (centred.iter().map(|v| (v - offset).powi(2)).sum::<f64>() / (all.len() - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        all.sort_by(f64::total_cmp);
        params.push(ParamSummary {
            name,
            mean: mu,
            sd,
            q05: quantile_sorted(&all, 0.05),
            q95: quantile_sorted(&all, 0.95),
            ess: effective_sample_size(&per_chain),
            rhat: rhat(&per_chain),
        });
        point.push(mu);
    }
    Ok(PosteriorSummary {
        params,
        point: from_flat(&point, draws.shape)?,
    })
}
