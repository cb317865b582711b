//! BIC, assignment entropy and ICL for comparing state counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::{forward_backward, forward_log_likelihood, ObservedSeries, SmoothedProbs};
use crate::inference::{fit, from_flat, ModelShape, PosteriorDraws, PriorConfig, RunConfig};

/// `-2 loglik + p ln N`.
pub fn bic(loglik: f64, p: usize, n: usize) -> f64 {
    -2.0 * loglik + p as f64 * (n as f64).ln()
}

/// Free parameters of a `states`-state, `components`-component model.
pub fn parameter_count(states: usize, components: usize, shared_weights: bool) -> usize {
    let weight_sets = if shared_weights { 1 } else { states };
    3 * states * components
        + states * (states - 1)
        + (states - 1)
        + weight_sets * (components - 1)
}

/// `-sum_t sum_k gamma_tk ln gamma_tk`, with `0 ln 0 = 0`.
pub fn assignment_entropy(g: &SmoothedProbs) -> f64 {
    -g.gamma
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

pub fn icl(bic: f64, entropy: f64) -> f64 {
    bic - entropy
}

/// Which log-likelihood enters the BIC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlugIn {
    /// Relabeled posterior-mean model.
    #[default]
    PosteriorMean,
    /// Largest log-likelihood over all posterior draws.
    MaxDraw,
}

impl std::str::FromStr for PlugIn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "posterior-mean" => Ok(PlugIn::PosteriorMean),
            "max-draw" => Ok(PlugIn::MaxDraw),
            other => Err(Error::Config(format!("unknown plug-in estimate `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub states: usize,
    pub log_likelihood: f64,
    pub parameters: usize,
    pub n: usize,
    pub bic: f64,
    pub entropy: f64,
    pub icl: f64,
}

impl Candidate {
    pub fn new(states: usize, log_likelihood: f64, parameters: usize, n: usize, entropy: f64) -> Self {
        let b = bic(log_likelihood, parameters, n);
        Self {
            states,
            log_likelihood,
            parameters,
            n,
            bic: b,
            entropy,
            icl: icl(b, entropy),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub candidates: Vec<Candidate>,
    /// State counts by ascending BIC; the default ranking.
    pub ranking_bic: Vec<usize>,
    /// State counts by ascending ICL.
    pub ranking_icl_ascending: Vec<usize>,
    /// State counts by descending ICL.
    pub ranking_icl_descending: Vec<usize>,
}

fn order_by(candidates: &[Candidate], key: impl Fn(&Candidate) -> f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    idx.sort_by(|&a, &b| key(&candidates[a]).total_cmp(&key(&candidates[b])));
    idx.into_iter().map(|i| candidates[i].states).collect()
}

impl SelectionReport {
    pub fn from_candidates(candidates: Vec<Candidate>) -> Self {
        let ranking_bic = order_by(&candidates, |c| c.bic);
        let ranking_icl_ascending = order_by(&candidates, |c| c.icl);
        let ranking_icl_descending = order_by(&candidates, |c| -c.icl);
        Self {
            candidates,
            ranking_bic,
            ranking_icl_ascending,
            ranking_icl_descending,
        }
    }

    /// Largest discrepancy between the stored BIC/ICL and a recomputation from
    /// the stored inputs.
    pub fn recomputation_error(&self) -> f64 {
        self.candidates
            .iter()
            .flat_map(|c| {
                let b = bic(c.log_likelihood, c.parameters, c.n);
                [(b - c.bic).abs(), (icl(b, c.entropy) - c.icl).abs()]
            })
            .fold(0.0, f64::max)
    }

    pub fn best_by_bic(&self) -> Option<usize> {
        self.ranking_bic.first().copied()
    }
}

/// Scores one fitted candidate.
pub fn score(
    y: &ObservedSeries,
    draws: &PosteriorDraws,
    point: &crate::hmm::HmmModel,
    plug_in: PlugIn,
) -> Result<Candidate> {
    let shape = draws.shape;
    let log_likelihood = match plug_in {
        PlugIn::PosteriorMean => forward_log_likelihood(point, y),
        PlugIn::MaxDraw => {
            let mut best = f64::NEG_INFINITY;
            for d in draws.iter() {
                best = best.max(forward_log_likelihood(&from_flat(d, shape)?, y));
            }
            best
        }
    };
    let entropy = assignment_entropy(&forward_backward(point, y));
    Ok(Candidate::new(
        shape.states,
        log_likelihood,
        parameter_count(shape.states, shape.components, shape.shared_weights),
        y.len(),
        entropy,
    ))
}

/// Fits every state count in `states` and ranks them.
pub fn select(
    y: &ObservedSeries,
    states: &[usize],
    components: usize,
    shared_weights: bool,
    prior: &PriorConfig,
    run: &RunConfig,
    plug_in: PlugIn,
) -> Result<SelectionReport> {
    if states.is_empty() {
        return Err(Error::Config("no candidate state counts".into()));
    }
    let mut candidates = Vec::with_capacity(states.len());
    for &z in states {
        let shape = ModelShape {
            states: z,
            components,
            shared_weights,
        };
        let f = fit(y, prior, shape, run)?;
        candidates.push(score(y, &f.draws, &f.summary.point, plug_in)?);
    }
    Ok(SelectionReport::from_candidates(candidates))
}
