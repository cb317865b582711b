//! Agreement between a true and a decoded state path.

use itertools::Itertools;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest state count handled by exhaustive alignment.
pub const MAX_ALIGN_STATES: usize = 6;

/// Counts with rows = true state, columns = decoded state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let z = counts.len();
        if z == 0 || counts.iter().any(|r| r.len() != z) {
            return Err(Error::Domain("confusion matrix must be square and non-empty".into()));
        }
        Ok(Self { counts })
    }

    pub fn n_states(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_states()).map(|i| self.counts[i][i]).sum()
    }

    pub fn to_array(&self) -> Array2<u64> {
        let z = self.n_states();
        Array2::from_shape_fn((z, z), |(i, j)| self.counts[i][j])
    }
}

fn agreement(truth: &[usize], decoded: &[usize], perm: &[usize]) -> usize {
    truth
        .iter()
        .zip(decoded)
        .filter(|(t, d)| perm[**d] == **t)
        .count()
}

/// Permutation `perm` of decoded labels (decoded `d` becomes `perm[d]`)
/// maximizing agreement with `truth`. Ties go to the lexicographically first
/// permutation.
pub fn align_states(truth: &[usize], decoded: &[usize], states: usize) -> Result<Vec<usize>> {
    if truth.len() != decoded.len() {
        return Err(Error::Domain(format!(
            "paths differ in length: {} vs {}",
            truth.len(),
            decoded.len()
        )));
    }
    if states > MAX_ALIGN_STATES {
        return Err(Error::Unsupported(format!(
            "alignment supports at most {MAX_ALIGN_STATES} states, got {states}"
        )));
    }
    if truth.iter().chain(decoded).any(|&s| s >= states) {
        return Err(Error::Domain(format!("state index out of range for {states} states")));
    }
    let mut best = ((0..states).collect::<Vec<_>>(), 0);
    let mut first = true;
    for perm in (0..states).permutations(states) {
        let a = agreement(truth, decoded, &perm);
        if first || a > best.1 {
            best = (perm, a);
            first = false;
        }
    }
    Ok(best.0)
}

pub fn apply_alignment(decoded: &[usize], perm: &[usize]) -> Vec<usize> {
    decoded.iter().map(|&d| perm[d]).collect()
}

pub fn confusion(truth: &[usize], decoded: &[usize], states: usize) -> Result<ConfusionMatrix> {
    if truth.len() != decoded.len() {
        return Err(Error::Domain("paths differ in length".into()));
    }
    let mut counts = vec![vec![0u64; states]; states];
    for (&t, &d) in truth.iter().zip(decoded) {
        if t >= states || d >= states {
            return Err(Error::Domain(format!("state index out of range for {states} states")));
        }
        counts[t][d] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

pub fn accuracy(c: &ConfusionMatrix) -> Result<f64> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Domain("empty confusion matrix".into()));
    }
    Ok(c.trace() as f64 / total as f64)
}

/// Cohen's kappa `(p_o - p_e) / (1 - p_e)`.
pub fn cohen_kappa(c: &ConfusionMatrix) -> Result<f64> {
    let p_o = accuracy(c)?;
    let z = c.n_states();
    let total = c.total() as f64;
    let p_e: f64 = (0..z)
        .map(|i| {
            let row: u64 = c.counts[i].iter().sum();
            let col: u64 = c.counts.iter().map(|r| r[i]).sum();
            row as f64 * col as f64
        })
        .sum::<f64>()
        / (total * total);
    if p_e >= 1.0 {
        let k = if p_o == 1.0 { 1.0 } else { 0.0 };
        log::warn!("chance agreement is 1; kappa is undefined, reporting {k}");
        return Ok(k);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}
