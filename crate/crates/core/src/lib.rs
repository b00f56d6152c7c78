//! Simulation and maximum-likelihood inference for the
//! duplication-mutation-complementation (DMC) network growth model.

pub mod engine;
pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod graph;
pub mod io;
pub mod likelihood;
pub mod reconstruction;

pub use engine::{
    deconstruct, forward_generate, log_likelihood, log_likelihood_at, mle, Params, PointEstimate,
    SufficientStats, Theta,
};
pub use error::{DmcError, Result};
pub use graph::{Graph, NodeId, StepStats};
pub use reconstruction::DeconstructionResult;
