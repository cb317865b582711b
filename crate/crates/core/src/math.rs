//! Small numerical helpers shared across modules.

use crate::error::{Error, Result};

/// `ln sum_i exp(x_i)`. Returns `-inf` for an empty slice or when every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Two-argument log-sum-exp.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Rescales a probability vector whose sum is within `tol` of one.
/// Entries must be finite and non-negative.
pub fn normalize_simplex(p: &[f64], tol: f64) -> Result<Vec<f64>> {
    if p.is_empty() {
        return Err(Error::Config("empty probability vector".into()));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Domain(format!(
            "probabilities must be finite and non-negative: {p:?}"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::Domain(format!(
            "probabilities sum to {sum}, not within {tol} of 1: {p:?}"
        )));
    }
    Ok(p.iter().map(|v| v / sum).collect())
}

/// Softmax over `logits` with an implicit trailing logit of zero.
/// The result has `logits.len() + 1` entries.
pub fn softmax_pinned(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(0.0_f64, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    out.push((-max).exp());
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

/// Inverse of [`softmax_pinned`]: `ln p_j - ln p_last`. Entries must be positive.
pub fn logits_pinned(p: &[f64]) -> Result<Vec<f64>> {
    if p.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain(format!(
            "simplex has a zero entry and no finite logit: {p:?}"
        )));
    }
    let last = p[p.len() - 1].ln();
    Ok(p[..p.len() - 1].iter().map(|v| v.ln() - last).collect())
}

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" definition). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator; zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}
