//! Maps between the unconstrained sampling vector and [`HmmModel`].
//!
//! Unconstrained layout, in order:
//! - `(xi, ln omega, lambda)` for every (state, component), state-major;
//! - `Z - 1` transition logits per row (last column pinned to 0);
//! - `Z - 1` initial-distribution logits;
//! - `K - 1` weight logits per state, or a single set when weights are shared.
//!
//! The constrained ("flat") layout stores, for every (state, component),
//! `(xi, omega, lambda, zeta)`, then the transition matrix row-major, then the
//! initial distribution.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::HmmModel;
use crate::math::{logits_pinned, softmax_pinned};
use crate::mixture::MixtureEmission;
use crate::skewnormal::SkewNormalParams;

/// State count, component count and weight sharing of a fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub states: usize,
    pub components: usize,
    #[serde(default)]
    pub shared_weights: bool,
}

impl Default for ModelShape {
    fn default() -> Self {
        Self::new(2, 2)
    }
}

impl ModelShape {
    pub fn new(states: usize, components: usize) -> Self {
        Self {
            states,
            components,
            shared_weights: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.states < 2 || self.components < 1 {
            return Err(Error::Config(format!(
                "need at least 2 states and 1 component, got {} and {}",
                self.states, self.components
            )));
        }
        Ok(())
    }

    pub fn weight_sets(&self) -> usize {
        if self.shared_weights {
            1
        } else {
            self.states
        }
    }

    pub fn transition_offset(&self) -> usize {
        3 * self.states * self.components
    }

    pub fn initial_offset(&self) -> usize {
        self.transition_offset() + self.states * (self.states - 1)
    }

    pub fn weights_offset(&self) -> usize {
        self.initial_offset() + self.states - 1
    }

    /// Dimension of the unconstrained vector.
    pub fn dim(&self) -> usize {
        self.weights_offset() + self.weight_sets() * (self.components - 1)
    }

    /// Index of `(xi, ln omega, lambda)` for one component; add 0, 1 or 2.
    pub fn component_index(&self, state: usize, component: usize) -> usize {
        3 * (state * self.components + component)
    }

    /// Length of the constrained layout.
    pub fn flat_len(&self) -> usize {
        4 * self.states * self.components + self.states * self.states + self.states
    }

    /// Names of the constrained parameters, 1-based.
    pub fn flat_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.flat_len());
        for s in 1..=self.states {
            for k in 1..=self.components {
                for p in ["xi", "omega", "lambda", "zeta"] {
                    names.push(format!("{p}[{s},{k}]"));
                }
            }
        }
        for i in 1..=self.states {
            for j in 1..=self.states {
                names.push(format!("A[{i},{j}]"));
            }
        }
        for i in 1..=self.states {
            names.push(format!("init[{i}]"));
        }
        names
    }
}

/// Back-transforms an unconstrained vector into a model.
pub fn to_constrained(theta: &[f64], shape: ModelShape) -> Result<HmmModel> {
    shape.validate()?;
    if theta.len() != shape.dim() {
        return Err(Error::Config(format!(
            "parameter vector has length {}, shape {:?} needs {}",
            theta.len(),
            shape,
            shape.dim()
        )));
    }
    let (z, k) = (shape.states, shape.components);
    let t_off = shape.transition_offset();
    let transition_rows: Vec<Vec<f64>> = (0..z)
        .map(|i| softmax_pinned(&theta[t_off + i * (z - 1)..t_off + (i + 1) * (z - 1)]))
        .collect();
    let transition = Array2::from_shape_fn((z, z), |(i, j)| transition_rows[i][j]);
    let s_off = shape.initial_offset();
    let initial = softmax_pinned(&theta[s_off..s_off + z - 1]);
    let w_off = shape.weights_offset();
    let mut emissions = Vec::with_capacity(z);
    for s in 0..z {
        let set = if shape.shared_weights { 0 } else { s };
        let weights = softmax_pinned(&theta[w_off + set * (k - 1)..w_off + (set + 1) * (k - 1)]);
        let components = (0..k)
            .map(|c| {
                let i = shape.component_index(s, c);
                SkewNormalParams::new(theta[i], theta[i + 1].exp(), theta[i + 2])
            })
            .collect::<Result<Vec<_>>>()?;
        emissions.push(MixtureEmission::new(weights, components)?);
    }
    HmmModel::new(transition, initial, emissions)
}

/// Inverse of [`to_constrained`]. Every probability must be strictly positive.
/// With shared weights the first state's weights are used.
pub fn to_unconstrained(m: &HmmModel, shape: ModelShape) -> Result<Vec<f64>> {
    shape.validate()?;
    let (z, k) = (shape.states, shape.components);
    if m.n_states() != z || m.emissions().iter().any(|e| e.n_components() != k) {
        return Err(Error::Config(format!(
            "model does not have shape {shape:?}"
        )));
    }
    let mut theta = vec![0.0; shape.dim()];
    for (s, e) in m.emissions().iter().enumerate() {
        for (c, p) in e.components.iter().enumerate() {
            let i = shape.component_index(s, c);
            theta[i] = p.xi;
            theta[i + 1] = p.omega.ln();
            theta[i + 2] = p.lambda;
        }
    }
    let t_off = shape.transition_offset();
    for (i, row) in m.transition().rows().into_iter().enumerate() {
        let logits = logits_pinned(&row.to_vec())?;
        theta[t_off + i * (z - 1)..t_off + (i + 1) * (z - 1)].copy_from_slice(&logits);
    }
    let s_off = shape.initial_offset();
    theta[s_off..s_off + z - 1].copy_from_slice(&logits_pinned(m.initial())?);
    let w_off = shape.weights_offset();
    for set in 0..shape.weight_sets() {
        let logits = logits_pinned(&m.emissions()[set].weights)?;
        theta[w_off + set * (k - 1)..w_off + (set + 1) * (k - 1)].copy_from_slice(&logits);
    }
    Ok(theta)
}

/// Flattens a model into the constrained layout.
pub fn to_flat(m: &HmmModel) -> Vec<f64> {
    let mut out = Vec::new();
    for e in m.emissions() {
        for (w, p) in e.weights.iter().zip(&e.components) {
            out.extend_from_slice(&[p.xi, p.omega, p.lambda, *w]);
        }
    }
    out.extend(m.transition().iter());
    out.extend_from_slice(m.initial());
    out
}

/// Rebuilds a model from the constrained layout, renormalizing every simplex
/// (weights, transition rows, initial distribution) by its sum.
pub fn from_flat(flat: &[f64], shape: ModelShape) -> Result<HmmModel> {
    if flat.len() != shape.flat_len() {
        return Err(Error::Config(format!(
            "flat vector has length {}, expected {}",
            flat.len(),
            shape.flat_len()
        )));
    }
    let (z, k) = (shape.states, shape.components);
    let renorm = |v: &[f64]| -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    };
    let mut emissions = Vec::with_capacity(z);
    for s in 0..z {
        let base = 4 * s * k;
        let mut comps = Vec::with_capacity(k);
        let mut weights = Vec::with_capacity(k);
        for c in 0..k {
            let o = base + 4 * c;
            comps.push(SkewNormalParams::new(flat[o], flat[o + 1], flat[o + 2])?);
            weights.push(flat[o + 3]);
        }
        emissions.push(MixtureEmission::new(renorm(&weights), comps)?);
    }
    let t_off = 4 * z * k;
    let transition = Array2::from_shape_fn((z, z), |(i, j)| flat[t_off + i * z + j]);
    let mut transition_rows = transition.clone();
    for mut row in transition_rows.rows_mut() {
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    let initial = renorm(&flat[t_off + z * z..]);
    HmmModel::new(transition_rows, initial, emissions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_formula() {
        let s = ModelShape::new(2, 2);
        assert_eq!(s.dim(), 12 + 2 + 1 + 2);
        assert_eq!(ModelShape::new(2, 1).dim(), 9);
        assert_eq!(ModelShape::new(3, 2).dim(), 18 + 6 + 2 + 3);
        let shared = ModelShape {
            shared_weights: true,
            ..ModelShape::new(3, 2)
        };
        assert_eq!(shared.dim(), 18 + 6 + 2 + 1);
        assert_eq!(s.flat_names().len(), s.flat_len());
    }

    #[test]
    fn zero_vector_is_uniform_with_unit_scales() {
        let shape = ModelShape::new(3, 2);
        let m = to_constrained(&vec![0.0; shape.dim()], shape).unwrap();
        assert!(m.transition().iter().all(|a| (a - 1.0 / 3.0).abs() < 1e-15));
        assert!(m.initial().iter().all(|a| (a - 1.0 / 3.0).abs() < 1e-15));
        for e in m.emissions() {
            assert_eq!(e.weights, vec![0.5, 0.5]);
            assert!(e.components.iter().all(|c| c.omega == 1.0));
        }
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let shape = ModelShape::new(2, 2);
        assert!(matches!(to_constrained(&[0.0; 3], shape), Err(Error::Config(_))));
    }

    #[test]
    fn flat_round_trip() {
        let shape = ModelShape::new(2, 2);
        let theta: Vec<f64> = (0..shape.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let m = to_constrained(&theta, shape).unwrap();
        let back = from_flat(&to_flat(&m), shape).unwrap();
        let (a, b) = (to_flat(&m), to_flat(&back));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
