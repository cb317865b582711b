//! Priors, reparameterization, the log-posterior and its gradient, the HMC
//! sampler, relabeling and posterior summaries.

pub mod chains;
pub mod hmc;
pub mod posterior;
pub mod prior;
pub mod relabel;
pub mod summary;
pub mod transform;

pub use chains::{run_chains, run_prior_only, ChainDraws, PosteriorDraws, RunConfig};
pub use hmc::{hmc_step, leapfrog, HmcState, Target};
pub use posterior::{grad_log_posterior, log_posterior, log_prior, Posterior};
pub use prior::{NormalPrior, PriorConfig, PriorScenario, ScalePrior, TransitionPrior};
pub use relabel::{relabel, relabel_model};
pub use summary::{summarize, ParamSummary, PosteriorSummary};
pub use transform::{from_flat, to_constrained, to_flat, to_unconstrained, ModelShape};

use crate::error::Result;
use crate::hmm::ObservedSeries;

/// A sampled, relabeled and summarized fit.
#[derive(Debug, Clone)]
pub struct Fit {
    pub draws: PosteriorDraws,
    pub summary: PosteriorSummary,
}

/// Runs the chains, relabels every draw and summarizes.
pub fn fit(
    y: &ObservedSeries,
    prior: &PriorConfig,
    shape: ModelShape,
    run: &RunConfig,
) -> Result<Fit> {
    let draws = relabel(&run_chains(y, prior, shape, run)?)?;
    let summary = summarize(&draws)?;
    Ok(Fit { draws, summary })
}
