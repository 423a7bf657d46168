//! Mixed membership stochastic blockmodels fitted to aggregated relational
//! data: simulation, aggregation, variational inference and evaluation.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod eval;
pub mod exec;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod model;
pub mod rng;
pub mod sim;
pub mod special;

pub use engine::{fit_minibatch, run_multipass, run_pass, svd_initialize, FitConfig, MinibatchPlan};
pub use error::{Error, Result};
pub use graph::{aggregate_ard, ArdEntry, ArdMatrix, DirectedGraph, SubpopulationMap};
pub use matrix::Matrix;
pub use model::{elbo_lstar, update_auxiliary, AuxiliaryTable, Priors, VariationalState};
pub use sim::GroundTruth;
