//! Linear-chain conditional random field over `{B, I, O}`.
//!
//! Emission weights are indexed by (feature name, label); transitions are a
//! dense 3x3 matrix. Training minimizes the negative log-likelihood with an
//! L2 penalty using L-BFGS. Decoding is Viterbi, by default constrained to
//! valid IOB output.

use alloc::string::String;

use thiserror::Error;

pub mod features;
pub mod inference;
pub mod lbfgs;
pub mod model;
pub mod train;

pub use features::{
    CorpusStatistics, FeatureConfig, FeatureContext, FeatureSeq, default_stopwords,
    extract_features,
};
pub use inference::{Marginals, Potentials, forward_backward, log_partition, viterbi};
pub use lbfgs::Termination;
pub use model::{AttrSeq, CrfModel, FeatureIndex};
pub use train::{Objective, Resources, TrainConfig, TrainReport, nll_and_gradient, train};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrfError {
    #[error("at least one feature family must be enabled")]
    NoFeatureFamily,
    #[error("sentence `{id}` token {index} has no POS tag but linguistic features are enabled")]
    MissingPos { id: String, index: usize },
    #[error("sentence `{0}` has no gold labels")]
    MissingGold(String),
    #[error("instance {instance}: gold labels are not valid IOB at index {index}")]
    InvalidGold { instance: usize, index: usize },
    #[error("instance {0}: features and labels differ in length")]
    InstanceLength(usize),
    #[error("training data is empty")]
    EmptyDataset,
    #[error("more than {limit} distinct features")]
    TooManyFeatures { limit: usize },
    #[error("non-finite loss {loss} (largest |weight| = {max_weight})")]
    NonFiniteLoss { loss: f64, max_weight: f64 },
    #[error("invalid training config: {0}")]
    InvalidConfig(&'static str),
    #[error("model has {found} weights, expected {expected}")]
    WeightCount { expected: usize, found: usize },
    #[error("weight {0} is not finite")]
    NonFiniteWeight(usize),
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
}
