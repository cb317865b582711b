//! Multi-chain HMC runs over the model posterior.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::ObservedSeries;
use crate::math::{quantile_sorted, variance};

use super::hmc::{sample_chain, SamplerConfig, Target};
use super::posterior::Posterior;
use super::prior::PriorConfig;
use super::transform::{to_constrained, to_flat, ModelShape};

const MAX_INIT_ATTEMPTS: usize = 100;
/// Finite candidates drawn per chain before picking a start.
const INIT_CANDIDATES: usize = 20;

/// Chain count, lengths, seed and integrator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub chains: usize,
    pub warmup: usize,
    pub iters: usize,
    pub seed: u64,
    /// Leapfrog steps per trajectory.
    pub n_leapfrog: usize,
    pub target_accept: f64,
    pub initial_step_size: f64,
    pub step_jitter: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup: 500,
            iters: 500,
            seed: 1,
            n_leapfrog: 20,
            target_accept: 0.8,
            initial_step_size: 0.05,
            step_jitter: 0.1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.iters == 0 || self.n_leapfrog == 0 {
            return Err(Error::Config(
                "chains, iters and n_leapfrog must be at least 1".into(),
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::Config(format!(
                "target acceptance {} is outside (0, 1)",
                self.target_accept
            )));
        }
        if !(self.initial_step_size > 0.0) || !(0.0..1.0).contains(&self.step_jitter) {
            return Err(Error::Config("invalid step size or jitter".into()));
        }
        Ok(())
    }

    fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            warmup: self.warmup,
            iterations: self.iters,
            n_leapfrog: self.n_leapfrog,
            target_accept: self.target_accept,
            initial_step_size: self.initial_step_size,
            step_jitter: self.step_jitter,
        }
    }
}

/// Draws of one chain on the constrained scale, with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDraws {
    /// One row per iteration, in [`ModelShape::flat_names`] order.
    pub draws: Vec<Vec<f64>>,
    pub log_posterior: Vec<f64>,
    pub accept_rate: f64,
    pub mean_accept_prob: f64,
    pub divergences: usize,
    pub warmup_divergences: usize,
    pub step_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub shape: ModelShape,
    pub chains: Vec<ChainDraws>,
    /// Whether [`super::relabel::relabel`] has been applied.
    pub relabeled: bool,
}

impl PosteriorDraws {
    pub fn names(&self) -> Vec<String> {
        self.shape.flat_names()
    }

    pub fn n_draws(&self) -> usize {
        self.chains.iter().map(|c| c.draws.len()).sum()
    }

    /// All draws, chain by chain.
    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.chains.iter().flat_map(|c| c.draws.iter())
    }

    pub fn total_divergences(&self) -> usize {
        self.chains.iter().map(|c| c.divergences).sum()
    }
}

/// Random starting point: locations at data quantiles of sorted uniform
/// levels, scales near the data standard deviation, small shapes and logits.
pub fn initial_point<R: Rng + ?Sized>(
    y: Option<&ObservedSeries>,
    shape: ModelShape,
    rng: &mut R,
) -> Vec<f64> {
    let mut theta = vec![0.0; shape.dim()];
    let (z, k) = (shape.states, shape.components);
    let lambda = Normal::new(0.0, 0.5).unwrap();
    let unit = Normal::new(0.0, 1.0).unwrap();
    let (sorted, sd) = match y {
        Some(y) => {
            let mut v = y.values.clone();
            v.sort_by(f64::total_cmp);
            let sd = if v.len() > 1 { variance(&v).sqrt() } else { 1.0 };
            (Some(v), if sd > 0.0 && sd.is_finite() { sd } else { 1.0 })
        }
        None => (None, 1.0),
    };
    let mut levels: Vec<f64> = (0..z * k).map(|_| rng.random::<f64>()).collect();
    levels.sort_by(f64::total_cmp);
    for s in 0..z {
        for c in 0..k {
            let i = shape.component_index(s, c);
            theta[i] = match &sorted {
                Some(v) => quantile_sorted(v, levels[s * k + c]) + 0.1 * sd * unit.sample(rng),
                None => unit.sample(rng),
            };
            theta[i + 1] = sd.ln() + 0.2 * unit.sample(rng);
            theta[i + 2] = lambda.sample(rng);
        }
    }
    let logit = Normal::new(0.0, 0.2).unwrap();
    for v in &mut theta[shape.transition_offset()..] {
        *v = logit.sample(rng);
    }
    theta
}

fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Best of [`INIT_CANDIDATES`] random starting points by log-density.
fn choose_start<R: Rng + ?Sized>(target: &Posterior<'_>, chain: usize, rng: &mut R) -> Result<Vec<f64>> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut finite = 0;
    for _ in 0..MAX_INIT_ATTEMPTS {
        let theta = initial_point(target.data(), target.shape(), rng);
        let lp = target.log_density(&theta);
        if !lp.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|(b, _)| lp > *b) {
            best = Some((lp, theta));
        }
        finite += 1;
        if finite == INIT_CANDIDATES {
            break;
        }
    }
    best.map(|(_, theta)| theta).ok_or_else(|| {
        Error::Fit(format!(
            "chain {}: no finite starting point after {MAX_INIT_ATTEMPTS} attempts",
            chain + 1
        ))
    })
}

fn run_one(target: &Posterior<'_>, run: &RunConfig, chain: usize) -> Result<ChainDraws> {
    let shape = target.shape();
    let mut rng = chain_rng(run.seed, chain);
    let init = choose_start(target, chain, &mut rng)?;
    let out = sample_chain(target, init, &run.sampler(), &mut rng)?;
    let draws = out
        .draws
        .iter()
        .map(|theta| to_constrained(theta, shape).map(|m| to_flat(&m)))
        .collect::<Result<Vec<_>>>()?;
    log::debug!(
        "chain {}: accept {:.3}, step {:.4}, divergences {}",
        chain + 1,
        out.accept_rate,
        out.step_size,
        out.divergences
    );
    Ok(ChainDraws {
        draws,
        log_posterior: out.log_density,
        accept_rate: out.accept_rate,
        mean_accept_prob: out.mean_accept_prob,
        divergences: out.divergences,
        warmup_divergences: out.warmup_divergences,
        step_size: out.step_size,
    })
}

fn run_target(target: &Posterior<'_>, run: &RunConfig) -> Result<PosteriorDraws> {
    run.validate()?;
    let chains = (0..run.chains)
        .into_par_iter()
        .map(|c| run_one(target, run, c))
        .collect::<Result<Vec<_>>>()?;
    if chains.iter().all(|c| c.divergences == c.draws.len()) {
        let diag: Vec<String> = chains
            .iter()
            .enumerate()
            .map(|(i, c)| {
                format!(
                    "chain {}: {} divergent of {}, step {:.3e}",
                    i + 1,
                    c.divergences,
                    c.draws.len(),
                    c.step_size
                )
            })
            .collect();
        return Err(Error::Fit(format!(
            "all chains diverged ({})",
            diag.join("; ")
        )));
    }
    Ok(PosteriorDraws {
        shape: target.shape(),
        chains,
        relabeled: false,
    })
}

/// Samples the posterior of a `shape` model given `y`.
///
/// Chain `c` draws from a ChaCha8 stream `c` seeded with `run.seed`, so the
/// output depends only on the inputs, not on thread scheduling.
pub fn run_chains(
    y: &ObservedSeries,
    prior: &PriorConfig,
    shape: ModelShape,
    run: &RunConfig,
) -> Result<PosteriorDraws> {
    let minimum = shape.states * shape.components;
    if y.len() < minimum {
        return Err(Error::Config(format!(
            "series has {} observations; a {}-state, {}-component model needs at least {minimum}",
            y.len(),
            shape.states,
            shape.components
        )));
    }
    run_target(&Posterior::new(y, prior, shape)?, run)
}

/// Samples the prior alone (likelihood switched off).
pub fn run_prior_only(
    prior: &PriorConfig,
    shape: ModelShape,
    run: &RunConfig,
) -> Result<PosteriorDraws> {
    run_target(&Posterior::prior_only(prior, shape)?, run)
}
