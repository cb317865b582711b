//! Log-posterior of the HMM parameters on the unconstrained scale, with its
//! exact gradient.
//!
//! The likelihood gradient uses the forward-backward expectations: the
//! derivative of `ln p(y)` with respect to an emission parameter of state `j`
//! is the smoothed-probability-weighted sum of the per-observation
//! derivatives, and the derivative with respect to a transition logit is the
//! expected transition count minus its softmax share.

use ndarray::Array2;

use crate::error::Result;
use crate::hmm::{chain_expectations, forward_log_likelihood, ObservedSeries};
use crate::math::log_sum_exp;
use crate::skewnormal::LogPdfGradient;

use super::hmc::Target;
use super::prior::PriorConfig;
use super::transform::{to_constrained, ModelShape};

/// `ln Gamma(sum a) - sum ln Gamma(a_i)`.
fn dirichlet_log_norm(alpha: &[f64]) -> f64 {
    libm::lgamma(alpha.iter().sum()) - alpha.iter().map(|a| libm::lgamma(*a)).sum::<f64>()
}

/// Log-probabilities `ln p` of a pinned softmax over `logits`.
fn log_softmax_pinned(logits: &[f64]) -> Vec<f64> {
    let mut all = logits.to_vec();
    all.push(0.0);
    let lse = log_sum_exp(&all);
    all.iter().map(|l| l - lse).collect()
}

/// Dirichlet log-density of `softmax(logits)` plus the log-Jacobian of the
/// pinned softmax. Both collapse to `sum_i alpha_i ln p_i` plus a constant.
fn simplex_prior(logits: &[f64], alpha: &[f64], grad: &mut [f64]) -> f64 {
    let log_p = log_softmax_pinned(logits);
    let total: f64 = alpha.iter().sum();
    for (j, g) in grad.iter_mut().enumerate() {
        *g += alpha[j] - log_p[j].exp() * total;
    }
    dirichlet_log_norm(alpha)
        + alpha
            .iter()
            .zip(&log_p)
            .map(|(a, lp)| if *a == 0.0 { 0.0 } else { a * lp })
            .sum::<f64>()
}

/// The posterior target handed to the sampler.
#[derive(Debug, Clone)]
pub struct Posterior<'a> {
    data: Option<&'a ObservedSeries>,
    prior: &'a PriorConfig,
    shape: ModelShape,
    transition_alpha: Array2<f64>,
    weight_alpha: Vec<f64>,
    initial_alpha: Vec<f64>,
}

impl<'a> Posterior<'a> {
    pub fn new(data: &'a ObservedSeries, prior: &'a PriorConfig, shape: ModelShape) -> Result<Self> {
        Self::build(Some(data), prior, shape)
    }

    /// A target with the likelihood switched off, i.e. the prior alone.
    pub fn prior_only(prior: &'a PriorConfig, shape: ModelShape) -> Result<Self> {
        Self::build(None, prior, shape)
    }

    fn build(
        data: Option<&'a ObservedSeries>,
        prior: &'a PriorConfig,
        shape: ModelShape,
    ) -> Result<Self> {
        shape.validate()?;
        prior.validate(shape.states, shape.components)?;
        Ok(Self {
            data,
            prior,
            shape,
            transition_alpha: prior.transition.concentration(shape.states)?,
            weight_alpha: prior.weight_concentration(shape.components)?,
            initial_alpha: vec![prior.initial; shape.states],
        })
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn data(&self) -> Option<&'a ObservedSeries> {
        self.data
    }

    /// Log-prior (with transform Jacobians); its gradient is added into `grad`.
    pub fn log_prior_with_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let shape = self.shape;
        let (z, k) = (shape.states, shape.components);
        let mut lp = 0.0;
        for s in 0..z {
            for c in 0..k {
                let i = shape.component_index(s, c);
                let (xi, log_omega, lambda) = (theta[i], theta[i + 1], theta[i + 2]);
                let (scale_lp, scale_d) =
                    self.prior.omega.log_density_and_log_derivative(log_omega.exp());
                lp += self.prior.xi.log_density(xi) + scale_lp + log_omega
                    + self.prior.lambda.log_density(lambda);
                grad[i] += self.prior.xi.d_log_density(xi);
                grad[i + 1] += scale_d + 1.0;
                grad[i + 2] += self.prior.lambda.d_log_density(lambda);
            }
        }
        let t_off = shape.transition_offset();
        for i in 0..z {
            let r = t_off + i * (z - 1)..t_off + (i + 1) * (z - 1);
            let alpha = self.transition_alpha.row(i).to_vec();
            lp += simplex_prior(&theta[r.clone()], &alpha, &mut grad[r]);
        }
        let s_off = shape.initial_offset();
        let r = s_off..s_off + z - 1;
        lp += simplex_prior(&theta[r.clone()], &self.initial_alpha, &mut grad[r]);
        let w_off = shape.weights_offset();
        for set in 0..shape.weight_sets() {
            let r = w_off + set * (k - 1)..w_off + (set + 1) * (k - 1);
            lp += simplex_prior(&theta[r.clone()], &self.weight_alpha, &mut grad[r]);
        }
        lp
    }

    /// Log-likelihood; its gradient is added into `grad`.
    fn log_likelihood_with_gradient(&self, y: &ObservedSeries, theta: &[f64], grad: &mut [f64]) -> f64 {
        let shape = self.shape;
        let model = match to_constrained(theta, shape) {
            Ok(m) => m,
            Err(_) => return f64::NEG_INFINITY,
        };
        let (z, k, t_len) = (shape.states, shape.components, y.len());
        let mut log_emit = Array2::zeros((t_len, z));
        // responsibilities and component log-density gradients, indexed [t][j][c]
        let mut resp = vec![0.0; t_len * z * k];
        let mut comp_grad = vec![
            LogPdfGradient {
                d_xi: 0.0,
                d_log_omega: 0.0,
                d_lambda: 0.0
            };
            t_len * z * k
        ];
        let log_weights: Vec<Vec<f64>> = model
            .emissions()
            .iter()
            .map(|e| e.weights.iter().map(|w| w.ln()).collect())
            .collect();
        let mut terms = vec![0.0; k];
        for (t, &yt) in y.values.iter().enumerate() {
            for (j, e) in model.emissions().iter().enumerate() {
                let base = (t * z + j) * k;
                for (c, comp) in e.components.iter().enumerate() {
                    let (lg, g) = comp.log_pdf_with_gradient(yt);
                    terms[c] = log_weights[j][c] + lg;
                    comp_grad[base + c] = g;
                }
                let le = log_sum_exp(&terms);
                log_emit[[t, j]] = le;
                for c in 0..k {
                    resp[base + c] = (terms[c] - le).exp();
                }
            }
        }
        let ex = chain_expectations(&model.log_initial(), &model.log_transition(), &log_emit);
        if !ex.log_likelihood.is_finite() {
            return f64::NEG_INFINITY;
        }

        let w_off = shape.weights_offset();
        let mut occupancy = vec![0.0; z];
        for t in 0..t_len {
            for j in 0..z {
                let g = ex.gamma[[t, j]];
                occupancy[j] += g;
                let base = (t * z + j) * k;
                let set = if shape.shared_weights { 0 } else { j };
                for c in 0..k {
                    let w = g * resp[base + c];
                    let cg = comp_grad[base + c];
                    let i = shape.component_index(j, c);
                    grad[i] += w * cg.d_xi;
                    grad[i + 1] += w * cg.d_log_omega;
                    grad[i + 2] += w * cg.d_lambda;
                    if c + 1 < k {
                        grad[w_off + set * (k - 1) + c] += w;
                    }
                }
            }
        }
        for j in 0..z {
            let set = if shape.shared_weights { 0 } else { j };
            let weights = &model.emissions()[j].weights;
            for c in 0..k - 1 {
                grad[w_off + set * (k - 1) + c] -= occupancy[j] * weights[c];
            }
        }

        let t_off = shape.transition_offset();
        let a = model.transition();
        for i in 0..z {
            let row_total: f64 = ex.transition_counts.row(i).sum();
            for j in 0..z - 1 {
                grad[t_off + i * (z - 1) + j] += ex.transition_counts[[i, j]] - a[[i, j]] * row_total;
            }
        }
        let s_off = shape.initial_offset();
        for j in 0..z - 1 {
            grad[s_off + j] += ex.gamma[[0, j]] - model.initial()[j];
        }
        ex.log_likelihood
    }
}

impl Target for Posterior<'_> {
    fn dim(&self) -> usize {
        self.shape.dim()
    }

    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let lp = self.log_prior_with_gradient(theta, grad);
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        let ll = match self.data {
            Some(y) => self.log_likelihood_with_gradient(y, theta, grad),
            None => 0.0,
        };
        let v = lp + ll;
        if v.is_finite() && grad.iter().all(|g| g.is_finite()) {
            v
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let mut scratch = vec![0.0; theta.len()];
        let lp = self.log_prior_with_gradient(theta, &mut scratch);
        let ll = match self.data {
            Some(y) => match to_constrained(theta, self.shape) {
                Ok(m) => forward_log_likelihood(&m, y),
                Err(_) => f64::NEG_INFINITY,
            },
            None => 0.0,
        };
        lp + ll
    }
}

/// Log-prior density of `theta` on the unconstrained scale, including the
/// Jacobians of the scale and simplex transforms.
pub fn log_prior(theta: &[f64], prior: &PriorConfig, shape: ModelShape) -> Result<f64> {
    let target = Posterior::prior_only(prior, shape)?;
    check_dim(theta, shape)?;
    let mut scratch = vec![0.0; theta.len()];
    Ok(target.log_prior_with_gradient(theta, &mut scratch))
}

/// Unnormalized log-posterior: forward log-likelihood plus [`log_prior`].
pub fn log_posterior(
    theta: &[f64],
    y: &ObservedSeries,
    prior: &PriorConfig,
    shape: ModelShape,
) -> Result<f64> {
    check_dim(theta, shape)?;
    Ok(Posterior::new(y, prior, shape)?.log_density(theta))
}

/// Gradient of [`log_posterior`].
pub fn grad_log_posterior(
    theta: &[f64],
    y: &ObservedSeries,
    prior: &PriorConfig,
    shape: ModelShape,
) -> Result<Vec<f64>> {
    check_dim(theta, shape)?;
    let mut grad = vec![0.0; theta.len()];
    Posterior::new(y, prior, shape)?.log_density_and_gradient(theta, &mut grad);
    Ok(grad)
}

fn check_dim(theta: &[f64], shape: ModelShape) -> Result<()> {
    if theta.len() != shape.dim() {
        return Err(crate::Error::Config(format!(
            "parameter vector has length {}, expected {}",
            theta.len(),
            shape.dim()
        )));
    }
    Ok(())
}
