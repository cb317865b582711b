//! MAP state path by the Viterbi recursion, and changepoints read off that path.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::hmm::{HmmModel, ObservedSeries};

/// Decoded path with its trellis.
///
/// `changepoints` holds 0-based indices `t >= 1` where `path[t] != path[t - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiResult {
    pub path: Vec<usize>,
    /// `ln delta_t(j)`, `T x Z`.
    pub log_delta: Array2<f64>,
    /// `backpointers[t][j]`: best predecessor of state `j` at time `t` (row 0 unused).
    pub backpointers: Array2<usize>,
    pub changepoints: Vec<usize>,
}

impl ViterbiResult {
    /// Log-score of the decoded path, `max_j ln delta_T(j)`.
    pub fn log_score(&self) -> f64 {
        let last = self.log_delta.nrows() - 1;
        self.log_delta[[last, self.path[last]]]
    }
}

/// A switch in the decoded path. All fields are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Changepoint {
    pub index: usize,
    pub from: usize,
    pub to: usize,
}

/// First index of the maximum; ties go to the lowest index.
fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if i == 0 || v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Viterbi recursion on precomputed log-quantities.
pub fn viterbi_log(
    log_initial: &[f64],
    log_transition: &Array2<f64>,
    log_emit: &Array2<f64>,
) -> ViterbiResult {
    let (t_len, z) = log_emit.dim();
    let mut log_delta = Array2::from_elem((t_len, z), f64::NEG_INFINITY);
    let mut backpointers = Array2::zeros((t_len, z));
    for j in 0..z {
        log_delta[[0, j]] = log_initial[j] + log_emit[[0, j]];
    }
    for t in 1..t_len {
        for j in 0..z {
            let (i, best) =
                argmax((0..z).map(|i| log_delta[[t - 1, i]] + log_transition[[i, j]]));
            backpointers[[t, j]] = i;
            log_delta[[t, j]] = best + log_emit[[t, j]];
        }
    }
    let mut path = vec![0; t_len];
    path[t_len - 1] = argmax(log_delta.row(t_len - 1).iter().copied()).0;
    for t in (1..t_len).rev() {
        path[t - 1] = backpointers[[t, path[t]]];
    }
    let changepoints = (1..t_len).filter(|&t| path[t] != path[t - 1]).collect();
    ViterbiResult {
        path,
        log_delta,
        backpointers,
        changepoints,
    }
}

/// Most probable hidden path of `y` under `m`.
pub fn viterbi_decode(m: &HmmModel, y: &ObservedSeries) -> ViterbiResult {
    viterbi_log(
        &m.log_initial(),
        &m.log_transition(),
        &m.emission_log_densities(y),
    )
}

/// One entry per state switch along the decoded path, in order.
pub fn extract_changepoints(r: &ViterbiResult) -> Vec<Changepoint> {
    r.changepoints
        .iter()
        .map(|&t| Changepoint {
            index: t,
            from: r.path[t - 1],
            to: r.path[t],
        })
        .collect()
}
