//! Organic direct and indirect effects in the presence of a post-treatment
//! common cause `L` of mediator `M` and outcome `Y`.
//!
//! The crate provides
//! - an exact engine for discrete `(C, L, M)` ([`discrete`]),
//! - the parametric plug-in estimator with least-squares fits ([`parametric`]),
//! - nonparametric bootstrap inference ([`bootstrap`]),
//! - a structural-model simulator with counterfactual ground truth ([`scm_sim`]),
//! - the command-line front end ([`cli`]).

pub mod bootstrap;
pub mod cli;
pub mod discrete;
pub mod error;
pub mod json;
pub mod model;
pub mod parametric;
mod rng;
pub mod scm_sim;

pub use error::{Error, Result};
pub use model::{
    validate_dataset, Dataset, EffectEstimates, EstimandValues, Feature, FeatureSpec, ObservedRecord,
    OutcomeModelFit, ShiftModelFit, ValidationReport, Violation,
};
