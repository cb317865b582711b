//! The skew-normal distribution `SN(xi, omega^2, lambda)`.
//!
//! Density `f(y) = (2/omega) phi(u) Phi(lambda u)` with `u = (y - xi) / omega`,
//! where `phi` and `Phi` are the standard normal density and distribution
//! function. `lambda = 0` gives `Normal(xi, omega^2)`; flipping the sign of
//! `lambda` reflects the density about `xi`.

use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `0.5 * ln(2 pi)`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `ln Phi` switches to the asymptotic tail expansion.
const LOG_CDF_TAIL: f64 = -8.0;

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - HALF_LN_2PI).exp()
}

/// Standard normal distribution function through `erfc`.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// `ln Phi(x)`, finite for every finite `x`.
pub fn log_std_normal_cdf(x: f64) -> f64 {
    if x < LOG_CDF_TAIL {
        log_cdf_tail(x)
    } else if x > 0.0 {
        (-0.5 * libm::erfc(x / SQRT_2)).ln_1p()
    } else {
        std_normal_cdf(x).ln()
    }
}

/// Asymptotic expansion of `ln Phi(x)` for large negative `x`:
/// `Phi(x) ~ phi(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...)`, summed until the
/// terms stop shrinking.
fn log_cdf_tail(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = 1.0;
    let mut series = 1.0;
    for n in 1..200 {
        let next = -term * (2 * n - 1) as f64 / x2;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        series += term;
        if term.abs() < 1e-17 {
            break;
        }
    }
    -0.5 * x2 - (-x).ln() - HALF_LN_2PI + series.ln()
}

/// Inverse Mills ratio `phi(x) / Phi(x)`, stable for large negative `x`.
pub fn inverse_mills(x: f64) -> f64 {
    if x < LOG_CDF_TAIL {
        (-0.5 * x * x - HALF_LN_2PI - log_cdf_tail(x)).exp()
    } else {
        std_normal_pdf(x) / std_normal_cdf(x)
    }
}

/// `delta(lambda) = lambda / sqrt(1 + lambda^2)`.
#[inline]
pub fn delta(lambda: f64) -> f64 {
    lambda / (1.0 + lambda * lambda).sqrt()
}

/// Location, scale and shape of one skew-normal component.
///
/// `omega` is the scale, not the variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewNormalParams {
    pub xi: f64,
    pub omega: f64,
    pub lambda: f64,
}

/// Mean, variance, skewness and kurtosis (not excess) of a skew-normal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// Partial derivatives of `log_pdf` with respect to `(xi, ln omega, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPdfGradient {
    pub d_xi: f64,
    pub d_log_omega: f64,
    pub d_lambda: f64,
}

impl SkewNormalParams {
    pub fn new(xi: f64, omega: f64, lambda: f64) -> Result<Self> {
        let p = Self { xi, omega, lambda };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from a variance `omega^2`, as tabulated in simulation designs.
    pub fn from_variance(xi: f64, omega_sq: f64, lambda: f64) -> Result<Self> {
        if !(omega_sq > 0.0) {
            return Err(Error::Domain(format!(
                "skew-normal variance parameter must be positive, got {omega_sq}"
            )));
        }
        Self::new(xi, omega_sq.sqrt(), lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi.is_finite() && self.omega.is_finite() && self.lambda.is_finite()) {
            return Err(Error::Domain(format!(
                "skew-normal parameters must be finite: {self:?}"
            )));
        }
        if self.omega <= 0.0 {
            return Err(Error::Domain(format!(
                "skew-normal scale must be positive, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    #[inline]
    fn standardize(&self, y: f64) -> f64 {
        (y - self.xi) / self.omega
    }

    /// Density at `y`.
    pub fn pdf(&self, y: f64) -> Result<f64> {
        self.validate()?;
        if !y.is_finite() {
            return Err(Error::Domain(format!("non-finite observation {y}")));
        }
        let u = self.standardize(y);
        Ok(2.0 / self.omega * std_normal_pdf(u) * std_normal_cdf(self.lambda * u))
    }

    /// Log-density at `y`. Unlike [`pdf`](Self::pdf) this does not revalidate
    /// the parameters, since it sits on the likelihood hot path; callers are
    /// expected to hold validated parameters.
    #[inline]
    pub fn log_pdf(&self, y: f64) -> f64 {
        let u = self.standardize(y);
        std::f64::consts::LN_2 - self.omega.ln() - 0.5 * u * u - HALF_LN_2PI
            + log_std_normal_cdf(self.lambda * u)
    }

    /// Log-density together with its gradient in `(xi, ln omega, lambda)`.
    pub fn log_pdf_with_gradient(&self, y: f64) -> (f64, LogPdfGradient) {
        let u = self.standardize(y);
        let s = self.lambda * u;
        let mills = inverse_mills(s);
        let value = std::f64::consts::LN_2 - self.omega.ln() - 0.5 * u * u - HALF_LN_2PI
            + log_std_normal_cdf(s);
        // d/du of the log-density
        let d_u = -u + self.lambda * mills;
        let grad = LogPdfGradient {
            d_xi: -d_u / self.omega,
            d_log_omega: -1.0 - d_u * u,
            d_lambda: u * mills,
        };
        (value, grad)
    }

    pub fn moments(&self) -> Moments {
        let d = delta(self.lambda);
        let l2 = self.lambda * self.lambda;
        let denom = PI + (PI - 2.0) * l2;
        Moments {
            mean: self.xi + FRAC_2_PI.sqrt() * d * self.omega,
            variance: (1.0 - FRAC_2_PI * d * d) * self.omega * self.omega,
            skewness: SQRT_2 * (4.0 - PI) * l2 * self.lambda / denom.powf(1.5),
            kurtosis: 3.0 + 8.0 * (PI - 3.0) * l2 * l2 / (denom * denom),
        }
    }

    pub fn mean(&self) -> f64 {
        self.xi + FRAC_2_PI.sqrt() * delta(self.lambda) * self.omega
    }

    /// Draws `xi + omega (delta |U0| + sqrt(1 - delta^2) U1)` with independent
    /// standard normal `U0`, `U1`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let d = delta(self.lambda);
        let u0: f64 = rng.sample(StandardNormal);
        let u1: f64 = rng.sample(StandardNormal);
        self.xi + self.omega * (d * u0.abs() + (1.0 - d * d).sqrt() * u1)
    }
}
