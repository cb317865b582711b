//! Hidden Markov model with mixture emissions: likelihoods, smoothing and simulation.
//!
//! Every recursion runs in log space, so long series do not underflow. States
//! are 0-based in memory; file formats and reports shift them to 1-based.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{log_sum_exp, normalize_simplex};
use crate::mixture::{sample_categorical, MixtureEmission};

/// Tolerance for row sums of a validated transition matrix and initial distribution.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Row sums within this distance of one are renormalized on ingest.
pub const ROUNDING_TOL: f64 = 1e-2;

/// A `Z`-state HMM whose emission in each state is a skew-normal mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelFile", try_from = "ModelFile")]
pub struct HmmModel {
    transition: Array2<f64>,
    initial: Vec<f64>,
    emissions: Vec<MixtureEmission>,
}

/// Plain serialized layout of an [`HmmModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub transition: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    pub emissions: Vec<MixtureEmission>,
}

impl From<HmmModel> for ModelFile {
    fn from(m: HmmModel) -> Self {
        ModelFile {
            transition: m.transition.rows().into_iter().map(|r| r.to_vec()).collect(),
            initial: m.initial,
            emissions: m.emissions,
        }
    }
}

impl TryFrom<ModelFile> for HmmModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        HmmModel::new(rows_to_matrix(&f.transition)?, f.initial, f.emissions)
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let z = rows.len();
    if rows.iter().any(|r| r.len() != z) {
        return Err(Error::Config("transition matrix must be square".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((z, z), flat).map_err(|e| Error::Config(e.to_string()))
}

impl HmmModel {
    pub fn new(
        transition: Array2<f64>,
        initial: Vec<f64>,
        emissions: Vec<MixtureEmission>,
    ) -> Result<Self> {
        let m = Self {
            transition,
            initial,
            emissions,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds a model from tabulated values, renormalizing transition rows and
    /// the initial distribution when they are off by rounding.
    pub fn from_rounded(
        transition: &[Vec<f64>],
        initial: &[f64],
        emissions: Vec<MixtureEmission>,
    ) -> Result<Self> {
        let rows = transition
            .iter()
            .map(|r| normalize_simplex(r, ROUNDING_TOL))
            .collect::<Result<Vec<_>>>()?;
        let initial = normalize_simplex(initial, ROUNDING_TOL)?;
        Self::new(rows_to_matrix(&rows)?, initial, emissions)
    }

    pub fn validate(&self) -> Result<()> {
        let z = self.initial.len();
        if z < 2 {
            return Err(Error::Config(format!("an HMM needs at least two states, got {z}")));
        }
        if self.transition.dim() != (z, z) || self.emissions.len() != z {
            return Err(Error::Config(format!(
                "inconsistent state count: transition {:?}, initial {}, emissions {}",
                self.transition.dim(),
                z,
                self.emissions.len()
            )));
        }
        check_simplex(self.initial.iter().copied(), "initial distribution")?;
        for (i, row) in self.transition.rows().into_iter().enumerate() {
            check_simplex(row.iter().copied(), &format!("transition row {}", i + 1))?;
        }
        for e in &self.emissions {
            e.validate()?;
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    pub fn transition(&self) -> &Array2<f64> {
        &self.transition
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn emissions(&self) -> &[MixtureEmission] {
        &self.emissions
    }

    /// Element-wise log of the transition matrix (`-inf` for zero entries).
    pub fn log_transition(&self) -> Array2<f64> {
        self.transition.mapv(f64::ln)
    }

    pub fn log_initial(&self) -> Vec<f64> {
        self.initial.iter().map(|p| p.ln()).collect()
    }

    /// `T x Z` matrix of `ln p(y_t | z_t = j)`.
    pub fn emission_log_densities(&self, y: &ObservedSeries) -> Array2<f64> {
        let z = self.n_states();
        Array2::from_shape_fn((y.len(), z), |(t, j)| self.emissions[j].log_density(y.values[t]))
    }

    /// Reorders states: state `i` of the result is state `perm[i]` of `self`.
    pub fn permute_states(&self, perm: &[usize]) -> Self {
        let z = self.n_states();
        assert_eq!(perm.len(), z, "permutation length must equal the state count");
        Self {
            transition: Array2::from_shape_fn((z, z), |(i, j)| self.transition[[perm[i], perm[j]]]),
            initial: perm.iter().map(|&i| self.initial[i]).collect(),
            emissions: perm.iter().map(|&i| self.emissions[i].clone()).collect(),
        }
    }
}

fn check_simplex(values: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Domain(format!("{what} has an invalid entry {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::Domain(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// An observed sequence `y_1..y_T` with optional time labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedSeries {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl ObservedSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_labels(values, None)
    }

    pub fn with_labels(values: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("observed series must contain at least one value".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "observation {} is not finite ({})",
                pos + 1,
                values[pos]
            )));
        }
        if let Some(l) = &labels {
            if l.len() != values.len() {
                return Err(Error::Config(format!(
                    "{} labels for {} values",
                    l.len(),
                    values.len()
                )));
            }
        }
        Ok(Self { values, labels })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `gamma[t][k] = p(z_t = k | y_1..y_T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedProbs {
    pub gamma: Array2<f64>,
}

/// Log-space forward pass. Returns `ln alpha_t(j)` and `ln p(y_1..y_T)`.
pub fn forward_pass(
    log_initial: &[f64],
    log_transition: &Array2<f64>,
    log_emit: &Array2<f64>,
) -> (Array2<f64>, f64) {
    let (t_len, z) = log_emit.dim();
    let mut alpha = Array2::from_elem((t_len, z), f64::NEG_INFINITY);
    for j in 0..z {
        alpha[[0, j]] = log_initial[j] + log_emit[[0, j]];
    }
    let mut scratch = vec![0.0; z];
    for t in 1..t_len {
        for j in 0..z {
            for i in 0..z {
                scratch[i] = alpha[[t - 1, i]] + log_transition[[i, j]];
            }
            alpha[[t, j]] = log_sum_exp(&scratch) + log_emit[[t, j]];
        }
    }
    let loglik = log_sum_exp(alpha.row(t_len - 1).as_slice().expect("standard layout"));
    (alpha, loglik)
}

/// Log-space backward pass: `ln beta_t(i) = ln p(y_{t+1}..y_T | z_t = i)`.
pub fn backward_pass(log_transition: &Array2<f64>, log_emit: &Array2<f64>) -> Array2<f64> {
    let (t_len, z) = log_emit.dim();
    let mut beta = Array2::zeros((t_len, z));
    let mut scratch = vec![0.0; z];
    for t in (0..t_len.saturating_sub(1)).rev() {
        for i in 0..z {
            for j in 0..z {
                scratch[j] = log_transition[[i, j]] + log_emit[[t + 1, j]] + beta[[t + 1, j]];
            }
            beta[[t, i]] = log_sum_exp(&scratch);
        }
    }
    beta
}

/// `ln p(y_1..y_T)`, the log of the sum over all hidden paths.
pub fn forward_log_likelihood(m: &HmmModel, y: &ObservedSeries) -> f64 {
    let log_emit = m.emission_log_densities(y);
    forward_pass(&m.log_initial(), &m.log_transition(), &log_emit).1
}

/// Row-normalized `exp(ln alpha + ln beta)`.
fn marginals(alpha: &Array2<f64>, beta: &Array2<f64>) -> Array2<f64> {
    let mut gamma = alpha + beta;
    for mut row in gamma.rows_mut() {
        let total = log_sum_exp(row.as_slice().expect("standard layout"));
        row.mapv_inplace(|v| (v - total).exp());
    }
    gamma
}

/// Posterior summaries of the hidden chain given the data.
#[derive(Debug, Clone)]
pub struct ChainExpectations {
    pub log_likelihood: f64,
    /// `p(z_t = k | y)`, `T x Z`.
    pub gamma: Array2<f64>,
    /// Expected transition counts `sum_t p(z_{t-1} = i, z_t = j | y)`, `Z x Z`.
    pub transition_counts: Array2<f64>,
}

/// Forward-backward expectations from precomputed emission log-densities.
pub fn chain_expectations(
    log_initial: &[f64],
    log_transition: &Array2<f64>,
    log_emit: &Array2<f64>,
) -> ChainExpectations {
    let (t_len, z) = log_emit.dim();
    let (alpha, loglik) = forward_pass(log_initial, log_transition, log_emit);
    let beta = backward_pass(log_transition, log_emit);
    let gamma = marginals(&alpha, &beta);
    let mut counts = Array2::zeros((z, z));
    if loglik.is_finite() {
        for t in 1..t_len {
            for i in 0..z {
                let a = alpha[[t - 1, i]];
                if a == f64::NEG_INFINITY {
                    continue;
                }
                for j in 0..z {
                    let lp = a + log_transition[[i, j]] + log_emit[[t, j]] + beta[[t, j]] - loglik;
                    counts[[i, j]] += lp.exp();
                }
            }
        }
    }
    ChainExpectations {
        log_likelihood: loglik,
        gamma,
        transition_counts: counts,
    }
}

/// Smoothed state probabilities by forward-backward.
pub fn forward_backward(m: &HmmModel, y: &ObservedSeries) -> SmoothedProbs {
    let log_emit = m.emission_log_densities(y);
    let (alpha, _) = forward_pass(&m.log_initial(), &m.log_transition(), &log_emit);
    let beta = backward_pass(&m.log_transition(), &log_emit);
    SmoothedProbs {
        gamma: marginals(&alpha, &beta),
    }
}

/// `ln s_{z_1} + sum_t ln a_{z_{t-1} z_t} + sum_t ln p(y_t | z_t)` for a given path.
/// A zero-probability step gives `-inf`.
pub fn complete_data_log_likelihood(
    m: &HmmModel,
    y: &ObservedSeries,
    path: &[usize],
) -> Result<f64> {
    if path.len() != y.len() {
        return Err(Error::Config(format!(
            "path has length {}, series has length {}",
            path.len(),
            y.len()
        )));
    }
    if let Some(bad) = path.iter().find(|&&s| s >= m.n_states()) {
        return Err(Error::Config(format!(
            "state index {bad} out of range for {} states",
            m.n_states()
        )));
    }
    let mut ll = m.initial[path[0]].ln();
    for t in 1..path.len() {
        ll += m.transition[[path[t - 1], path[t]]].ln();
    }
    for (t, &s) in path.iter().enumerate() {
        ll += m.emissions[s].log_density(y.values[t]);
    }
    Ok(ll)
}

/// Output of [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub series: ObservedSeries,
    pub states: Vec<usize>,
    pub components: Vec<usize>,
}

/// Draws a hidden path and observations of length `t_len`.
pub fn simulate<R: Rng + ?Sized>(m: &HmmModel, t_len: usize, rng: &mut R) -> Result<Simulation> {
    if t_len == 0 {
        return Err(Error::Config("simulation length must be at least 1".into()));
    }
    let mut states = Vec::with_capacity(t_len);
    let mut components = Vec::with_capacity(t_len);
    let mut values = Vec::with_capacity(t_len);
    let mut state = sample_categorical(&m.initial, rng);
    for t in 0..t_len {
        if t > 0 {
            let row = m.transition.row(state);
            state = sample_categorical(row.as_slice().expect("standard layout"), rng);
        }
        let (y, k) = m.emissions[state].sample(rng);
        states.push(state);
        components.push(k);
        values.push(y);
    }
    Ok(Simulation {
        series: ObservedSeries::new(values)?,
        states,
        components,
    })
}
