//! Hamiltonian Monte Carlo with a diagonal mass and a fixed number of
//! leapfrog steps.
//!
//! With potential `V = -ln p(theta)` and kinetic energy `sum r_i^2 / (2 m_i)`,
//! one leapfrog step is
//!
//! ```text
//! r     <- r - (eps/2) dV/dtheta(theta)
//! theta <- theta + eps * r / m
//! r     <- r - (eps/2) dV/dtheta(theta)
//! ```
//!
//! and a trajectory of `L` steps is accepted with probability
//! `min(1, exp(H(theta, r) - H(theta*, r*)))`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Energy error beyond which a trajectory is rejected and flagged divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// An unnormalized log-density with gradient.
pub trait Target {
    fn dim(&self) -> usize;

    /// Returns `ln p(theta)` and writes its gradient into `grad`.
    /// Returns `-inf` where the density is zero or cannot be evaluated.
    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64;

    fn log_density(&self, theta: &[f64]) -> f64 {
        let mut grad = vec![0.0; theta.len()];
        self.log_density_and_gradient(theta, &mut grad)
    }
}

/// Position, momentum and integrator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct HmcState {
    pub theta: Vec<f64>,
    pub momentum: Vec<f64>,
    /// Per-coordinate mass `m_i > 0`.
    pub mass: Vec<f64>,
    pub step_size: f64,
    pub n_leapfrog: usize,
}

impl HmcState {
    pub fn validate(&self) -> Result<()> {
        let d = self.theta.len();
        if self.momentum.len() != d || self.mass.len() != d {
            return Err(Error::Config("position, momentum and mass differ in length".into()));
        }
        if self.mass.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::Config("mass entries must be positive".into()));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::Config(format!("invalid step size {}", self.step_size)));
        }
        if self.n_leapfrog == 0 {
            return Err(Error::Config("need at least one leapfrog step".into()));
        }
        Ok(())
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.momentum
            .iter()
            .zip(&self.mass)
            .map(|(r, m)| r * r / (2.0 * m))
            .sum()
    }
}

/// End point of a leapfrog trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state: HmcState,
    pub log_density: f64,
    pub gradient: Vec<f64>,
    /// Set when the log-density or its gradient stopped being finite.
    pub divergent: bool,
}

/// Integrates `state.n_leapfrog` leapfrog steps. `start_gradient` is the
/// gradient of `ln p` (i.e. `-dV/dtheta`) at `state.theta`.
pub fn leapfrog<T: Target + ?Sized>(
    target: &T,
    state: &HmcState,
    start_gradient: &[f64],
) -> Trajectory {
    let eps = state.step_size;
    let mut theta = state.theta.clone();
    let mut r = state.momentum.clone();
    let mut grad = start_gradient.to_vec();
    let mut logp = f64::NAN;
    let mut divergent = false;
    for _ in 0..state.n_leapfrog {
        for i in 0..theta.len() {
            r[i] += 0.5 * eps * grad[i];
            theta[i] += eps * r[i] / state.mass[i];
        }
        logp = target.log_density_and_gradient(&theta, &mut grad);
        if !logp.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            divergent = true;
            break;
        }
        for i in 0..theta.len() {
            r[i] += 0.5 * eps * grad[i];
        }
    }
    Trajectory {
        state: HmcState {
            theta,
            momentum: r,
            mass: state.mass.clone(),
            step_size: eps,
            n_leapfrog: state.n_leapfrog,
        },
        log_density: logp,
        gradient: grad,
        divergent,
    }
}

/// A position with its cached log-density and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPoint {
    pub theta: Vec<f64>,
    pub log_density: f64,
    pub gradient: Vec<f64>,
}

impl ChainPoint {
    pub fn evaluate<T: Target + ?Sized>(target: &T, theta: Vec<f64>) -> Self {
        let mut gradient = vec![0.0; theta.len()];
        let log_density = target.log_density_and_gradient(&theta, &mut gradient);
        Self {
            theta,
            log_density,
            gradient,
        }
    }
}

/// Result of one HMC transition.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub point: ChainPoint,
    pub accepted: bool,
    /// `H(proposal) - H(current)`; `inf` for a divergent trajectory.
    pub delta_h: f64,
    pub accept_prob: f64,
    pub divergent: bool,
}

/// Resamples momentum from `Normal(0, m)`, integrates, and applies the
/// Metropolis correction.
pub fn hmc_step<T: Target + ?Sized, R: Rng + ?Sized>(
    target: &T,
    current: &ChainPoint,
    mass: &[f64],
    step_size: f64,
    n_leapfrog: usize,
    rng: &mut R,
) -> StepOutcome {
    let momentum: Vec<f64> = mass
        .iter()
        .map(|m| m.sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let state = HmcState {
        theta: current.theta.clone(),
        momentum,
        mass: mass.to_vec(),
        step_size,
        n_leapfrog,
    };
    let h0 = -current.log_density + state.kinetic_energy();
    let traj = leapfrog(target, &state, &current.gradient);
    let h1 = -traj.log_density + traj.state.kinetic_energy();
    let delta_h = h1 - h0;
    let divergent = traj.divergent || !delta_h.is_finite() || delta_h.abs() > DIVERGENCE_THRESHOLD;
    if divergent {
        return StepOutcome {
            point: current.clone(),
            accepted: false,
            delta_h: if delta_h.is_finite() { delta_h } else { f64::INFINITY },
            accept_prob: 0.0,
            divergent: true,
        };
    }
    let accept_prob = (-delta_h).exp().min(1.0);
    let u: f64 = rng.random();
    if u < accept_prob {
        StepOutcome {
            point: ChainPoint {
                theta: traj.state.theta,
                log_density: traj.log_density,
                gradient: traj.gradient,
            },
            accepted: true,
            delta_h,
            accept_prob,
            divergent: false,
        }
    } else {
        StepOutcome {
            point: current.clone(),
            accepted: false,
            delta_h,
            accept_prob,
            divergent: false,
        }
    }
}

/// Nesterov dual averaging of `ln eps` toward a target acceptance rate.
#[derive(Debug, Clone)]
pub struct DualAveraging {
    target: f64,
    mu: f64,
    h_bar: f64,
    log_eps: f64,
    log_eps_bar: f64,
    iteration: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    pub fn new(initial_step: f64, target_accept: f64) -> Self {
        Self {
            target: target_accept,
            mu: (10.0 * initial_step).ln(),
            h_bar: 0.0,
            log_eps: initial_step.ln(),
            log_eps_bar: 0.0,
            iteration: 0.0,
        }
    }

    /// Feeds one acceptance probability; returns the next step size to try.
    pub fn update(&mut self, accept_prob: f64) -> f64 {
        self.iteration += 1.0;
        let m = self.iteration;
        let w = 1.0 / (m + Self::T0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target - accept_prob);
        self.log_eps = self.mu - m.sqrt() / Self::GAMMA * self.h_bar;
        let eta = m.powf(-Self::KAPPA);
        self.log_eps_bar = eta * self.log_eps + (1.0 - eta) * self.log_eps_bar;
        self.log_eps.exp()
    }

    /// Averaged step size, used once adaptation ends.
    pub fn final_step_size(&self) -> f64 {
        if self.iteration == 0.0 {
            self.log_eps.exp()
        } else {
            self.log_eps_bar.exp()
        }
    }
}

/// Settings of a single-chain run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub warmup: usize,
    pub iterations: usize,
    pub n_leapfrog: usize,
    pub target_accept: f64,
    pub initial_step_size: f64,
    /// Each trajectory uses `eps * (1 + jitter * u)`, `u ~ Uniform(-1, 1)`.
    pub step_jitter: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            warmup: 500,
            iterations: 500,
            n_leapfrog: 20,
            target_accept: 0.8,
            initial_step_size: 0.1,
            step_jitter: 0.1,
        }
    }
}

/// Draws and diagnostics from one chain, on the unconstrained scale.
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub draws: Vec<Vec<f64>>,
    pub log_density: Vec<f64>,
    pub accept_rate: f64,
    pub mean_accept_prob: f64,
    pub divergences: usize,
    pub warmup_divergences: usize,
    pub step_size: f64,
    pub mass: Vec<f64>,
}

/// Regularized per-coordinate variance used as the inverse mass.
fn regularized_variances(samples: &[Vec<f64>]) -> Vec<f64> {
    let n = samples.len() as f64;
    let d = samples[0].len();
    (0..d)
        .map(|i| {
            let col: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            let v = crate::math::variance(&col);
            (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0))
        })
        .collect()
}

/// Runs warmup and sampling from `init`.
///
/// Warmup adapts the step size by dual averaging throughout. Positions
/// visited between 50% and 85% of warmup estimate per-coordinate posterior
/// variances; the mass becomes their inverse and step-size adaptation
/// restarts for the remaining warmup.
pub fn sample_chain<T: Target + ?Sized, R: Rng + ?Sized>(
    target: &T,
    init: Vec<f64>,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<ChainRun> {
    if init.len() != target.dim() {
        return Err(Error::Config(format!(
            "initial point has length {}, target dimension is {}",
            init.len(),
            target.dim()
        )));
    }
    if cfg.n_leapfrog == 0 || !(cfg.initial_step_size > 0.0) {
        return Err(Error::Config("invalid sampler settings".into()));
    }
    let mut point = ChainPoint::evaluate(target, init);
    if !point.log_density.is_finite() {
        return Err(Error::Fit("log-density is not finite at the initial point".into()));
    }
    let dim = target.dim();
    let mut mass = vec![1.0; dim];
    let mut step = cfg.initial_step_size;
    let mut adapter = DualAveraging::new(step, cfg.target_accept);
    let window = (cfg.warmup / 2, cfg.warmup * 85 / 100);
    let mut window_draws: Vec<Vec<f64>> = Vec::new();
    let mut warmup_divergences = 0;

    let jittered = |eps: f64, rng: &mut R| {
        if cfg.step_jitter > 0.0 {
            eps * (1.0 + cfg.step_jitter * (2.0 * rng.random::<f64>() - 1.0))
        } else {
            eps
        }
    };

    for it in 0..cfg.warmup {
        let eps = jittered(step, rng);
        let out = hmc_step(target, &point, &mass, eps, cfg.n_leapfrog, rng);
        warmup_divergences += out.divergent as usize;
        point = out.point;
        step = adapter.update(out.accept_prob);
        if it >= window.0 && it < window.1 {
            window_draws.push(point.theta.clone());
        }
        if it + 1 == window.1 && window_draws.len() >= 10 {
            mass = regularized_variances(&window_draws)
                .into_iter()
                .map(|v| 1.0 / v)
                .collect();
            step = adapter.final_step_size();
            adapter = DualAveraging::new(step, cfg.target_accept);
        }
    }
    if cfg.warmup > 0 {
        step = adapter.final_step_size();
    }

    let mut draws = Vec::with_capacity(cfg.iterations);
    let mut log_density = Vec::with_capacity(cfg.iterations);
    let (mut accepted, mut divergences, mut accept_sum) = (0usize, 0usize, 0.0);
    for _ in 0..cfg.iterations {
        let eps = jittered(step, rng);
        let out = hmc_step(target, &point, &mass, eps, cfg.n_leapfrog, rng);
        accepted += out.accepted as usize;
        divergences += out.divergent as usize;
        accept_sum += out.accept_prob;
        point = out.point;
        draws.push(point.theta.clone());
        log_density.push(point.log_density);
    }
    let n = cfg.iterations.max(1) as f64;
    Ok(ChainRun {
        draws,
        log_density,
        accept_rate: accepted as f64 / n,
        mean_accept_prob: accept_sum / n,
        divergences,
        warmup_divergences,
        step_size: step,
        mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent Gaussian target with per-coordinate standard deviations.
    struct Gaussian(Vec<f64>);

    impl Target for Gaussian {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
            let mut lp = 0.0;
            for i in 0..theta.len() {
                let s2 = self.0[i] * self.0[i];
                lp -= 0.5 * theta[i] * theta[i] / s2;
                grad[i] = -theta[i] / s2;
            }
            lp
        }
    }

    #[test]
    fn single_step_by_hand() {
        let target = Gaussian(vec![1.0]);
        let state = HmcState {
            theta: vec![1.0],
            momentum: vec![0.0],
            mass: vec![1.0],
            step_size: 0.1,
            n_leapfrog: 1,
        };
        let traj = leapfrog(&target, &state, &[-1.0]);
        assert_relative_eq!(traj.state.theta[0], 0.995, max_relative = 1e-15);
        assert_relative_eq!(traj.state.momentum[0], -0.09975, max_relative = 1e-14);
    }

    #[test]
    fn reversibility() {
        let target = Gaussian(vec![1.0, 0.5, 2.0]);
        let state = HmcState {
            theta: vec![0.3, -1.2, 2.0],
            momentum: vec![0.7, 0.1, -1.1],
            mass: vec![1.0, 2.0, 0.5],
            step_size: 0.05,
            n_leapfrog: 40,
        };
        let mut g = vec![0.0; 3];
        target.log_density_and_gradient(&state.theta, &mut g);
        let fwd = leapfrog(&target, &state, &g);
        let mut back = fwd.state.clone();
        back.momentum.iter_mut().for_each(|r| *r = -*r);
        let ret = leapfrog(&target, &back, &fwd.gradient);
        for i in 0..3 {
            assert!((ret.state.theta[i] - state.theta[i]).abs() < 1e-10);
            assert!((ret.state.momentum[i] + state.momentum[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn tiny_steps_always_accept() {
        use rand::SeedableRng;
        let target = Gaussian(vec![1.0; 4]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut point = ChainPoint::evaluate(&target, vec![0.5; 4]);
        for _ in 0..50 {
            let out = hmc_step(&target, &point, &[1.0; 4], 1e-5, 5, &mut rng);
            assert!(out.delta_h.abs() < 1e-8);
            assert!(out.accept_prob > 0.999_999);
            point = out.point;
        }
    }

    #[test]
    fn state_validation() {
        let ok = HmcState {
            theta: vec![0.0],
            momentum: vec![0.0],
            mass: vec![1.0],
            step_size: 0.1,
            n_leapfrog: 1,
        };
        assert!(ok.validate().is_ok());
        assert!(HmcState { mass: vec![0.0], ..ok.clone() }.validate().is_err());
        assert!(HmcState { step_size: 0.0, ..ok.clone() }.validate().is_err());
        assert!(HmcState { n_leapfrog: 0, ..ok }.validate().is_err());
    }

    struct Broken;
    impl Target for Broken {
        fn dim(&self) -> usize {
            1
        }
        fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
            grad[0] = -theta[0];
            if theta[0].abs() > 1.0 {
                f64::NEG_INFINITY
            } else {
                -0.5 * theta[0] * theta[0]
            }
        }
    }

    #[test]
    fn non_finite_density_is_divergent_and_rejected() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let point = ChainPoint::evaluate(&Broken, vec![0.9]);
        let out = hmc_step(&Broken, &point, &[1e-4], 0.5, 10, &mut rng);
        assert!(out.divergent);
        assert!(!out.accepted);
        assert_eq!(out.point, point);
    }
}
