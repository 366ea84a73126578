//! Torque-guided graph rewiring around a personalized-propagation node
//! classifier.
//!
//! Each propagation layer scores its edges by *torque*, the product of
//! endpoint representation distance and endpoint energy. High-torque
//! edges above the largest weighted gap are removed, and low-torque links
//! between similar nodes are added with Gumbel-Softmax weights. An
//! auxiliary score-matching objective sharpens the energy signal.

// `!(x > 0.0)` is used on purpose so NaN fails parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod energy;
mod error;
pub mod graph;
pub mod kernel;
pub mod model;
pub mod seed;
pub mod torque;

pub use config::ExperimentConfig;
pub use data::{Dataset, Features, InjectionRecord, InjectionStrategy, Report, RunRecord, Splits};
pub use energy::{energy_score, score_matching_loss, EnergyScoreVector};
pub use error::{Error, Result};
pub use graph::{Graph, SparseMatrix};
pub use kernel::{Matrix, Tape, Var};
pub use model::{ModelState, PropagationStack, TrainOutcome};
pub use torque::{EdgeScoreTable, RewirePlan, Variant};
