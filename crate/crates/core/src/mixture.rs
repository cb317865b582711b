//! Finite mixtures of skew-normal components: the state-conditional emission law.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{log_sum_exp, normalize_simplex};
use crate::skewnormal::SkewNormalParams;

/// Tolerance on the weight sum for a validated mixture.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// `sum_k weights[k] * SN(y; components[k])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureEmission {
    pub weights: Vec<f64>,
    pub components: Vec<SkewNormalParams>,
}

impl MixtureEmission {
    pub fn new(weights: Vec<f64>, components: Vec<SkewNormalParams>) -> Result<Self> {
        let e = Self {
            weights,
            components,
        };
        e.validate()?;
        Ok(e)
    }

    /// Like [`new`](Self::new), but renormalizes weights whose sum is off by
    /// table rounding (within `1e-2` of one).
    pub fn from_rounded(weights: Vec<f64>, components: Vec<SkewNormalParams>) -> Result<Self> {
        let weights = normalize_simplex(&weights, 1e-2)?;
        Self::new(weights, components)
    }

    /// A single-component mixture.
    pub fn single(component: SkewNormalParams) -> Self {
        Self {
            weights: vec![1.0],
            components: vec![component],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Config("mixture needs at least one component".into()));
        }
        if self.components.len() != self.weights.len() {
            return Err(Error::Config(format!(
                "mixture has {} weights but {} components",
                self.weights.len(),
                self.components.len()
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Domain(format!(
                "mixture weights must be non-negative: {:?}",
                self.weights
            )));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Domain(format!(
                "mixture weights sum to {sum}, expected 1"
            )));
        }
        for c in &self.components {
            c.validate()?;
        }
        Ok(())
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// `ln sum_k zeta_k g_k(y)` by log-sum-exp over component log-densities.
    pub fn log_density(&self, y: f64) -> f64 {
        if self.components.len() == 1 {
            return self.components[0].log_pdf(y);
        }
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w.ln() + c.log_pdf(y))
            .collect();
        log_sum_exp(&terms)
    }

    /// Posterior component probabilities at `y`.
    ///
    /// Returns the responsibilities and a flag that is set when every
    /// weighted component density underflowed, in which case the result is
    /// uniform.
    pub fn responsibilities(&self, y: f64) -> (Vec<f64>, bool) {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w.ln() + c.log_pdf(y))
            .collect();
        let total = log_sum_exp(&terms);
        if !total.is_finite() {
            let k = terms.len();
            return (vec![1.0 / k as f64; k], true);
        }
        let mut r: Vec<f64> = terms.iter().map(|t| (t - total).exp()).collect();
        let s: f64 = r.iter().sum();
        r.iter_mut().for_each(|v| *v /= s);
        (r, false)
    }

    /// Weighted mean of the component means.
    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * c.mean())
            .sum()
    }

    /// Draws a component index from the weights, then an observation from it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, usize) {
        let k = sample_categorical(&self.weights, rng);
        (self.components[k].sample(rng), k)
    }
}

/// Inverse-CDF draw from a probability vector. Zero-weight categories are never chosen.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}
