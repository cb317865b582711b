//! Built-in simulation scenarios and the end-to-end recovery study.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{accuracy, align_states, apply_alignment, cohen_kappa, confusion, ConfusionMatrix};
use crate::hmm::{simulate, HmmModel};
use crate::inference::{
    fit, relabel_model, ChainDraws, ModelShape, PosteriorSummary, PriorConfig, RunConfig,
    TransitionPrior,
};
use crate::mixture::MixtureEmission;
use crate::skewnormal::SkewNormalParams;
use crate::viterbi::{extract_changepoints, viterbi_decode, Changepoint};

/// Stream of the data-generating RNG, kept apart from the chain streams.
const SIMULATION_STREAM: u64 = 1 << 32;

/// A generating model with its series length and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub model: HmmModel,
    pub length: usize,
    pub seed: u64,
    /// Transition prior used when fitting this scenario unless overridden.
    pub transition_prior: TransitionPrior,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.length == 0 {
            return Err(Error::Config(format!("scenario `{}` has length 0", self.name)));
        }
        Ok(())
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape::new(self.model.n_states(), self.model.emissions()[0].n_components())
    }
}

/// Stationary distribution of a row-stochastic matrix by power iteration.
pub fn stationary_distribution(a: &ndarray::Array2<f64>) -> Vec<f64> {
    let z = a.nrows();
    let mut p = vec![1.0 / z as f64; z];
    for _ in 0..10_000 {
        let next: Vec<f64> = (0..z).map(|j| (0..z).map(|i| p[i] * a[[i, j]]).sum()).collect();
        let diff = next.iter().zip(&p).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        p = next;
        if diff < 1e-15 {
            break;
        }
    }
    let s: f64 = p.iter().sum();
    p.iter().map(|v| v / s).collect()
}

/// One state's emission from the printed (xi, omega^2, lambda) pairs and the
/// first component's weight.
fn state(xi: [f64; 2], omega_sq: [f64; 2], lambda: [f64; 2], zeta: f64) -> Result<MixtureEmission> {
    let comps = (0..2)
        .map(|k| SkewNormalParams::from_variance(xi[k], omega_sq[k], lambda[k]))
        .collect::<Result<Vec<_>>>()?;
    MixtureEmission::from_rounded(vec![zeta, 1.0 - zeta], comps)
}

fn with_stationary_start(rows: &[Vec<f64>], emissions: Vec<MixtureEmission>) -> Result<HmmModel> {
    let z = rows.len();
    let probe = HmmModel::from_rounded(rows, &vec![1.0 / z as f64; z], emissions)?;
    let initial = stationary_distribution(probe.transition());
    HmmModel::new(probe.transition().clone(), initial, probe.emissions().to_vec())
}

pub fn two_state() -> Scenario {
    let emissions = vec![
        state([5.6328, 4.8938], [0.9526, 0.9686], [0.9777, -0.8351], 0.9048),
        state([10.4042, 11.5115], [2.0092, 1.6524], [0.8933, 0.0284], 0.0951),
    ]
    .into_iter()
    .collect::<Result<Vec<_>>>()
    .expect("two-state emissions are valid");
    let rows = vec![vec![0.8707, 0.1292], vec![0.4035, 0.5964]];
    Scenario {
        name: "two-state".into(),
        description: "Two states, two skew-normal components each. Scales are square roots of \
                      the printed variances. Each state's printed mixing value is the weight \
                      of its first component; the second gets the complement. Transition rows \
                      are renormalized and the chain starts from its stationary distribution."
            .into(),
        model: with_stationary_start(&rows, emissions).expect("two-state model is valid"),
        length: 600,
        seed: 7,
        transition_prior: TransitionPrior::default(),
    }
}

pub fn three_state() -> Scenario {
    let emissions = vec![
        state([3.7816, 3.6279], [0.1237, 1.1986], [0.5110, 0.0172], 0.0050),
        state([8.3478, 9.9347], [0.8513, 0.4675], [0.5396, -0.2152], 0.8715),
        state([15.0385, 14.7152], [1.1937, 1.7938], [-0.1079, 0.4528], 0.1234),
    ]
    .into_iter()
    .collect::<Result<Vec<_>>>()
    .expect("three-state emissions are valid");
    let rows = vec![
        vec![0.4661, 0.1368, 0.3972],
        vec![0.4069, 0.2424, 0.3507],
        vec![0.7762, 0.2020, 0.0218],
    ];
    Scenario {
        name: "three-state".into(),
        description: "Three states, two skew-normal components each. Scales are square roots \
                      of the printed variances. Each state's printed mixing value is the \
                      weight of its first component; the second gets the complement. \
                      Transition rows are renormalized and the chain starts from its \
                      stationary distribution. Fitted with a uniform Dirichlet transition \
                      prior because the generating rows are not persistent."
            .into(),
        model: with_stationary_start(&rows, emissions).expect("three-state model is valid"),
        length: 1000,
        seed: 7,
        transition_prior: TransitionPrior::uniform(),
    }
}

pub fn builtin_scenarios() -> Vec<Scenario> {
    vec![two_state(), three_state()]
}

pub fn find_scenario(name: &str) -> Result<Scenario> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown scenario `{name}` (available: two-state, three-state)"
            ))
        })
}

/// RNG that generates a scenario's data.
pub fn simulation_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SIMULATION_STREAM);
    rng
}

/// One row of the truth-versus-estimate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRow {
    pub name: String,
    /// `component`, `weight` or `transition`.
    pub kind: String,
    pub truth: f64,
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q95: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub chain: usize,
    pub accept_rate: f64,
    pub step_size: f64,
    pub divergences: usize,
}

impl ChainDiagnostics {
    pub fn from_chains(chains: &[ChainDraws]) -> Vec<Self> {
        chains
            .iter()
            .enumerate()
            .map(|(i, c)| Self {
                chain: i + 1,
                accept_rate: c.accept_rate,
                step_size: c.step_size,
                divergences: c.divergences,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub scenario: String,
    pub length: usize,
    pub seed: u64,
    pub run: RunConfig,
    pub prior: PriorConfig,
    /// Generating model after the same relabeling as the estimates.
    pub truth: HmmModel,
    pub estimate: HmmModel,
    pub parameters: Vec<ParameterRow>,
    pub coverage: f64,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub kappa: f64,
    /// Decoded label `d` maps to true label `alignment[d]`.
    pub alignment: Vec<usize>,
    pub true_path: Vec<usize>,
    pub decoded_path: Vec<usize>,
    pub changepoints: Vec<Changepoint>,
    pub chains: Vec<ChainDiagnostics>,
}

fn parameter_rows(truth: &HmmModel, summary: &PosteriorSummary) -> Vec<ParameterRow> {
    let mut rows = Vec::new();
    let mut push = |name: String, kind: &str, truth: f64| {
        let p = summary.get(&name).expect("summary covers every parameter");
        rows.push(ParameterRow {
            kind: kind.into(),
            truth,
            mean: p.mean,
            sd: p.sd,
            q05: p.q05,
            q95: p.q95,
            covered: p.covers(truth),
            name,
        });
    };
    for (s, e) in truth.emissions().iter().enumerate() {
        for (k, c) in e.components.iter().enumerate() {
            let (s1, k1) = (s + 1, k + 1);
            push(format!("xi[{s1},{k1}]"), "component", c.xi);
            push(format!("omega[{s1},{k1}]"), "component", c.omega);
            push(format!("lambda[{s1},{k1}]"), "component", c.lambda);
        }
    }
    for (s, e) in truth.emissions().iter().enumerate() {
        for (k, w) in e.weights.iter().enumerate().take(e.n_components() - 1) {
            push(format!("zeta[{},{}]", s + 1, k + 1), "weight", *w);
        }
    }
    let a = truth.transition();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            push(format!("A[{},{}]", i + 1, j + 1), "transition", a[[i, j]]);
        }
    }
    rows
}

/// Simulates the scenario, fits it, decodes with the posterior-mean model and
/// scores the decoded path against the truth.
pub fn run_study(sc: &Scenario, prior: &PriorConfig, run: &RunConfig) -> Result<StudyReport> {
    sc.validate()?;
    let shape = sc.shape();
    let sim = simulate(&sc.model, sc.length, &mut simulation_rng(sc.seed))?;
    let fitted = fit(&sim.series, prior, shape, run)?;
    let point = &fitted.summary.point;
    let decoded = viterbi_decode(point, &sim.series);
    let z = shape.states;

    let truth = relabel_model(&sc.model, shape.shared_weights)?;
    // relabeling may reorder the true states too; express the true path in those labels
    let truth_means: Vec<f64> = sc.model.emissions().iter().map(MixtureEmission::mean).collect();
    let mut order: Vec<usize> = (0..z).collect();
    order.sort_by(|&a, &b| truth_means[a].total_cmp(&truth_means[b]));
    let mut rank = vec![0; z];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let true_path: Vec<usize> = sim.states.iter().map(|&s| rank[s]).collect();

    let alignment = align_states(&true_path, &decoded.path, z)?;
    let aligned = apply_alignment(&decoded.path, &alignment);
    let cm = confusion(&true_path, &aligned, z)?;
    let parameters = parameter_rows(&truth, &fitted.summary);
    let coverage =
        parameters.iter().filter(|r| r.covered).count() as f64 / parameters.len() as f64;
    Ok(StudyReport {
        scenario: sc.name.clone(),
        length: sc.length,
        seed: sc.seed,
        run: *run,
        prior: prior.clone(),
        truth,
        estimate: point.clone(),
        parameters,
        coverage,
        accuracy: accuracy(&cm)?,
        kappa: cohen_kappa(&cm)?,
        confusion: cm,
        alignment,
        true_path,
        changepoints: extract_changepoints(&decoded),
        decoded_path: decoded.path,
        chains: ChainDiagnostics::from_chains(&fitted.draws.chains),
    })
}
