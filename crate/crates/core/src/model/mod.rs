//! Propagation backbone with per-layer rewiring, training and evaluation.
//!
//! `H⁰ = ReLU(dropout(X)·Θ)`, then for each layer `l` the previous
//! layer's support is rewired from `(H^{l-1}, H^{l-1}·Φ)` and
//! `H^l = ReLU(α·𝒜^l·H^{l-1} + (1-α)·H⁰)`. Logits are `H^L·Φ`.

mod eval;
mod forward;
mod stack;
mod train;

use rand::Rng as _;

pub use eval::{edge_detection_auc, evaluate, roc_auc, Evaluation};
pub use forward::{
    first_layer_table, forward, forward_frozen, forward_on_tape, initial_transform,
    initial_transform_on_tape, propagate_layer, propagate_on_tape, propagate_stack, ForwardOptions,
    LayerTrace, TapeForward,
};
pub use stack::{LayerSummary, PropagationStack};
pub use train::{
    calibrate_step, calibration_targets, sm_objective_on_tape, train, write_curve_csv, CalibrationStep,
    CalibrationTargets, EpochRecord, TrainOutcome, CURVE_HEADER,
};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::kernel::{Adam, Matrix};
use crate::seed;

/// Trainable parameters: input transform `Θ` (d×m) and head `Φ` (m×c).
#[derive(Debug, Clone)]
pub struct ModelState {
    pub theta: Matrix,
    pub phi: Matrix,
    pub optimizer: Adam,
    pub epoch: usize,
}

fn glorot(rows: usize, cols: usize, rng: &mut seed::Rng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-limit..=limit)).collect();
    Matrix::new(rows, cols, data).expect("length matches shape")
}

impl ModelState {
    /// Glorot-uniform initialisation.
    pub fn new(
        in_dim: usize,
        hidden: usize,
        classes: usize,
        lr: f64,
        weight_decay: f64,
        seed: u64,
    ) -> Result<Self> {
        if in_dim == 0 || hidden == 0 || classes == 0 {
            return Err(Error::parameter(format!(
                "model dims must be positive, got {in_dim}x{hidden}x{classes}"
            )));
        }
        let mut rng = seed::rng(seed::derive(seed, &[0x1417]));
        let theta = glorot(in_dim, hidden, &mut rng);
        let phi = glorot(hidden, classes, &mut rng);
        let optimizer = Adam::new(lr, weight_decay, &[theta.shape(), phi.shape()]);
        Ok(ModelState { theta, phi, optimizer, epoch: 0 })
    }

    pub fn for_config(in_dim: usize, classes: usize, cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        ModelState::new(in_dim, cfg.hidden, classes, cfg.lr, cfg.weight_decay, seed)
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.phi.is_finite()
    }
}
