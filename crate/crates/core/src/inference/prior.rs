//! Prior distributions over the HMM parameters.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skewnormal::{std_normal_cdf, HALF_LN_2PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub sd: f64,
}

impl NormalPrior {
    pub fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        -0.5 * z * z - self.sd.ln() - HALF_LN_2PI
    }

    pub fn d_log_density(&self, x: f64) -> f64 {
        (self.mean - x) / (self.sd * self.sd)
    }
}

/// Prior on a component scale `omega > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScalePrior {
    /// Cauchy(0, scale) restricted to the positive half-line.
    HalfCauchy { scale: f64 },
    /// Normal(mean, sd) truncated to `[lower, upper]`.
    TruncatedNormal {
        mean: f64,
        sd: f64,
        lower: f64,
        upper: f64,
    },
}

impl ScalePrior {
    /// Log-density in `omega` together with its derivative in `ln omega`
    /// (excluding the Jacobian of the log transform).
    pub fn log_density_and_log_derivative(&self, omega: f64) -> (f64, f64) {
        match *self {
            ScalePrior::HalfCauchy { scale } => {
                let r = omega / scale;
                let value = std::f64::consts::LN_2
                    - (std::f64::consts::PI * scale).ln()
                    - (r * r).ln_1p();
                (value, -2.0 * r * r / (1.0 + r * r))
            }
            ScalePrior::TruncatedNormal {
                mean,
                sd,
                lower,
                upper,
            } => {
                if omega < lower || omega > upper {
                    return (f64::NEG_INFINITY, 0.0);
                }
                let z = (omega - mean) / sd;
                let mass = std_normal_cdf((upper - mean) / sd) - std_normal_cdf((lower - mean) / sd);
                let value = -0.5 * z * z - sd.ln() - HALF_LN_2PI - mass.ln();
                (value, -z / sd * omega)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScalePrior::HalfCauchy { scale } => scale > 0.0 && scale.is_finite(),
            ScalePrior::TruncatedNormal {
                mean,
                sd,
                lower,
                upper,
            } => sd > 0.0 && mean.is_finite() && lower >= 0.0 && lower < upper,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid scale prior {self:?}")))
        }
    }
}

/// Dirichlet prior on each row of the transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransitionPrior {
    /// Every row `Dirichlet(concentration, ..., concentration)`.
    Symmetric { concentration: f64 },
    /// Self-transition with prior mean `self_mean`; the remaining mass is
    /// split evenly over the other states. `total` is the row concentration sum.
    Sticky { self_mean: f64, total: f64 },
    /// Explicit `Z x Z` concentration matrix.
    Matrix { concentration: Vec<Vec<f64>> },
}

impl Default for TransitionPrior {
    /// Prior mean 0.9 for staying put, with standard deviation about 0.07
    /// (for two states this is `Dirichlet(16.2, 1.8)`).
    fn default() -> Self {
        TransitionPrior::Sticky {
            self_mean: 0.9,
            total: 18.0,
        }
    }
}

impl TransitionPrior {
    pub fn uniform() -> Self {
        TransitionPrior::Symmetric { concentration: 1.0 }
    }

    /// Sticky prior calibrated so that the self-transition has the given
    /// prior mean and standard deviation (through its Beta marginal).
    pub fn sticky_from_moments(mean: f64, sd: f64) -> Result<Self> {
        let total = mean * (1.0 - mean) / (sd * sd) - 1.0;
        if !(mean > 0.0 && mean < 1.0) || !(total > 0.0) {
            return Err(Error::Config(format!(
                "no Dirichlet has self-transition mean {mean} and sd {sd}"
            )));
        }
        Ok(TransitionPrior::Sticky {
            self_mean: mean,
            total,
        })
    }

    pub fn concentration(&self, states: usize) -> Result<Array2<f64>> {
        let alpha = match self {
            TransitionPrior::Symmetric { concentration } => {
                Array2::from_elem((states, states), *concentration)
            }
            TransitionPrior::Sticky { self_mean, total } => {
                let off = (1.0 - self_mean) * total / (states - 1) as f64;
                Array2::from_shape_fn((states, states), |(i, j)| {
                    if i == j {
                        self_mean * total
                    } else {
                        off
                    }
                })
            }
            TransitionPrior::Matrix { concentration } => {
                if concentration.len() != states || concentration.iter().any(|r| r.len() != states)
                {
                    return Err(Error::Config(format!(
                        "transition concentration must be {states}x{states}"
                    )));
                }
                Array2::from_shape_fn((states, states), |(i, j)| concentration[i][j])
            }
        };
        if alpha.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::Config(format!(
                "transition concentrations must be positive: {alpha:?}"
            )));
        }
        Ok(alpha)
    }
}

/// Named prior configurations compared in the sensitivity study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorScenario {
    #[default]
    Baseline,
    S1,
    S2,
    Custom,
}

impl std::str::FromStr for PriorScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(PriorScenario::Baseline),
            "s1" => Ok(PriorScenario::S1),
            "s2" => Ok(PriorScenario::S2),
            "custom" => Ok(PriorScenario::Custom),
            other => Err(Error::Config(format!("unknown prior scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    #[serde(default)]
    pub scenario: PriorScenario,
    pub xi: NormalPrior,
    pub omega: ScalePrior,
    pub lambda: NormalPrior,
    #[serde(default)]
    pub transition: TransitionPrior,
    /// Dirichlet concentration of each state's mixture weights; empty means all ones.
    #[serde(default)]
    pub weights: Vec<f64>,
    /// Symmetric Dirichlet concentration of the initial distribution.
    #[serde(default = "one")]
    pub initial: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self::for_scenario(PriorScenario::Baseline, TransitionPrior::default())
    }
}

impl PriorConfig {
    /// Emission priors for a named scenario; the transition prior is chosen separately.
    pub fn for_scenario(scenario: PriorScenario, transition: TransitionPrior) -> Self {
        let (xi, omega, lambda) = match scenario {
            PriorScenario::Baseline | PriorScenario::Custom => (
                NormalPrior::new(0.0, 10.0),
                ScalePrior::HalfCauchy { scale: 2.0 },
                NormalPrior::new(0.0, 1.0),
            ),
            PriorScenario::S1 => (
                NormalPrior::new(0.0, 5.0),
                ScalePrior::TruncatedNormal {
                    mean: 0.0,
                    sd: 2.0,
                    lower: 0.01,
                    upper: 10.0,
                },
                NormalPrior::new(0.0, 0.5),
            ),
            PriorScenario::S2 => (
                NormalPrior::new(0.0, 1.0),
                ScalePrior::HalfCauchy { scale: 1.0 },
                NormalPrior::new(0.0, 0.5),
            ),
        };
        Self {
            scenario,
            xi,
            omega,
            lambda,
            transition,
            weights: Vec::new(),
            initial: 1.0,
        }
    }

    /// Concentration vector for the mixture weights of a `components`-component state.
    pub fn weight_concentration(&self, components: usize) -> Result<Vec<f64>> {
        if self.weights.is_empty() {
            return Ok(vec![1.0; components]);
        }
        if self.weights.len() != components {
            return Err(Error::Config(format!(
                "weight concentration has {} entries for {components} components",
                self.weights.len()
            )));
        }
        Ok(self.weights.clone())
    }

    pub fn validate(&self, states: usize, components: usize) -> Result<()> {
        for p in [self.xi, self.lambda] {
            if !(p.sd > 0.0) || !p.mean.is_finite() {
                return Err(Error::Config(format!("invalid normal prior {p:?}")));
            }
        }
        self.omega.validate()?;
        self.transition.concentration(states)?;
        if self.weight_concentration(components)?.iter().any(|a| !(*a > 0.0)) || !(self.initial > 0.0)
        {
            return Err(Error::Config("Dirichlet concentrations must be positive".into()));
        }
        Ok(())
    }
}
