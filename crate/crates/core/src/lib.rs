//! Hidden Markov models whose state-conditional emissions are finite mixtures
//! of skew-normal distributions.
//!
//! Parameters are sampled from their posterior by Hamiltonian Monte Carlo,
//! the most probable hidden path is decoded with the Viterbi recursion, and
//! state switches along that path are reported as changepoints. Competing
//! state counts are compared with BIC and ICL.

pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod hmm;
pub mod inference;
pub mod math;
pub mod mixture;
pub mod model_selection;
pub mod simulate;
pub mod skewnormal;
pub mod viterbi;

pub use error::{Error, IngestError, Result};
pub use hmm::{HmmModel, ObservedSeries, SmoothedProbs};
pub use mixture::MixtureEmission;
pub use skewnormal::SkewNormalParams;
pub use viterbi::{Changepoint, ViterbiResult};
