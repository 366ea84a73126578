//! Energy scores under structural perturbation and the score-matching
//! calibration objective.
//!
//! A node's energy is `E_i = -logsumexp(f(x_i))`. Its score against a
//! perturbed graph is the relative change `(E_i - Ê_i) / E_i`. The
//! objective compares scores from two independent perturbations:
//! `L = (1/N) Σ [(s1_i - s2_i)² + ½ s1_i²]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest denominator magnitude used in [`energy_score`].
pub const ENERGY_CLAMP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyScoreVector {
    pub scores: Vec<f64>,
    /// Nodes whose clean energy was below [`ENERGY_CLAMP`] in magnitude.
    pub clamp_count: usize,
    /// Perturbation seed behind the perturbed energies, when known.
    pub seed: Option<u64>,
}

impl EnergyScoreVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Signed clamp: keeps the sign of `e` (zero counts as positive) and
/// lifts the magnitude to at least [`ENERGY_CLAMP`].
fn clamp_denominator(e: f64) -> (f64, bool) {
    if e.abs() >= ENERGY_CLAMP {
        (e, false)
    } else if e < 0.0 {
        (-ENERGY_CLAMP, true)
    } else {
        (ENERGY_CLAMP, true)
    }
}

fn check_lengths(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::structural(format!("{what}: lengths {a} and {b} differ")));
    }
    Ok(())
}

pub fn energy_score(clean: &[f64], perturbed: &[f64]) -> Result<EnergyScoreVector> {
    check_lengths(clean.len(), perturbed.len(), "energy_score")?;
    let mut clamp_count = 0;
    let scores = clean
        .iter()
        .zip(perturbed)
        .map(|(&e, &p)| {
            let (den, clamped) = clamp_denominator(e);
            clamp_count += clamped as usize;
            (e - p) / den
        })
        .collect::<Vec<_>>();
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("energy score of node {i}")));
    }
    Ok(EnergyScoreVector { scores, clamp_count, seed: None })
}

pub fn score_matching_loss(s1: &EnergyScoreVector, s2: &EnergyScoreVector) -> Result<f64> {
    check_lengths(s1.len(), s2.len(), "score_matching_loss")?;
    if s1.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = s1.scores.iter().zip(&s2.scores).map(|(&a, &b)| (a - b) * (a - b) + 0.5 * a * a).sum();
    Ok(total / s1.len() as f64)
}

/// Loss value and its gradient with respect to the clean energies, holding
/// both perturbed energy vectors fixed.
#[derive(Debug, Clone)]
pub struct ScoreMatching {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub clamp_count: usize,
}

pub fn score_matching_with_grad(clean: &[f64], pert_a: &[f64], pert_b: &[f64]) -> Result<ScoreMatching> {
    let s1 = energy_score(clean, pert_a)?;
    let s2 = energy_score(clean, pert_b)?;
    let loss = score_matching_loss(&s1, &s2)?;
    let n = clean.len().max(1) as f64;
    let grad = clean
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let (den, clamped) = clamp_denominator(e);
            let dden = if clamped { 0.0 } else { 1.0 };
            let (a, b) = (pert_a[i], pert_b[i]);
            let ds1 = 1.0 / den - (e - a) * dden / (den * den);
            let ddiff = -(b - a) * dden / (den * den);
            let diff = s1.scores[i] - s2.scores[i];
            (2.0 * diff * ddiff + s1.scores[i] * ds1) / n
        })
        .collect();
    Ok(ScoreMatching { loss, grad, clamp_count: s1.clamp_count })
}
