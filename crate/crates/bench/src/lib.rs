//! Fixtures shared by the criterion benches under `benches/`.

use torquegnn::data::{generate_sbm, SbmParams};
use torquegnn::{Dataset, ExperimentConfig, ModelState, Variant};

/// Heterophilous block model of `n` nodes with roughly eight neighbours each.
pub fn block_model(n: usize, dim: usize) -> Dataset {
    let p_out = 6.0 / n as f64;
    let p_in = 2.0 * 5.0 / n as f64;
    generate_sbm(&SbmParams { n, classes: 5, p_in, p_out, dim, seed: 7 }).expect("valid block model")
}

pub fn config(variant: Variant, layers: usize) -> ExperimentConfig {
    ExperimentConfig { variant, layers, hidden: 64, ..Default::default() }
}

pub fn model(d: &Dataset, cfg: &ExperimentConfig) -> ModelState {
    ModelState::for_config(d.num_features(), d.num_classes, cfg, 0).expect("positive dims")
}
