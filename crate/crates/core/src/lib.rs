//! Supervised classification toolkit: eight classifiers, confusion-matrix
//! metrics, and a benchmark harness comparing them under resubstitution,
//! holdout and k-fold cross-validation.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod linear_prob;
pub mod margin_instance;
pub mod metrics;
pub mod neural;
pub mod seed;
pub mod trees;

pub use dataset::{Dataset, FoldPlan, ScalingParams, SyntheticSpec};
pub use error::{Error, Result};
