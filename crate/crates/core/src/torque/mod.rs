//! Torque-driven rewiring of a layer's propagation matrix.
//!
//! Every edge gets a "lever arm" (representation distance), a "force"
//! (product of shifted endpoint energies) and their product, the torque.
//! High-torque edges above the largest weighted gap in the torque-sorted
//! list are cut; low-torque candidate links drawn from each node's most
//! similar peers are added with Gumbel-Softmax weights.

mod audit;
mod candidates;
mod cutoff;
mod gumbel;
mod rewire;
mod score;

pub use audit::{audit_rows, write_audit_csv, AuditRow, AUDIT_HEADER};
pub use candidates::build_candidates;
pub use cutoff::{anomalous_weight, find_cutoff, torque_gap, torque_gaps};
pub use gumbel::{gumbel_select, GumbelChoice, TORQUE_NORM_EPS};
pub use rewire::{rewire_layer, RewirePlan, Variant};
pub use score::{
    edge_distance, edge_energy, node_energy, score_layer, EdgeScoreTable, LayerScorer, ScoredEdge,
};

/// Division guard in the torque-gap ratio.
pub const DEFAULT_DELTA: f64 = 1e-12;
