use rand_distr::{Distribution, Gumbel};

use super::ScoredEdge;
use crate::error::{Error, Result};
use crate::graph::Edge;
use crate::seed;

/// Margin keeping normalized torques, and hence both logits, strictly inside `(0, 1)`.
pub const TORQUE_NORM_EPS: f64 = 1e-6;

/// One retained candidate link and its two-way soft selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelChoice {
    pub edge: Edge,
    pub distance: f64,
    pub energy: f64,
    pub torque: f64,
    /// Min-max normalized torque in `[ε, 1-ε]`; the "discard" logit.
    pub normalized: f64,
    pub p_discard: f64,
    pub p_select: f64,
}

/// Keep the `⌊r·|candidates|⌋` lowest-torque candidates and weight each with
/// the Gumbel-Softmax probability of its "select" class. Logits are
/// `π_discard = T̂` and `π_select = 1 - T̂`. Noise is zero when `training`
/// is false, giving `p_select = π_select^{1/τ} / (π_discard^{1/τ} + π_select^{1/τ})`.
pub fn gumbel_select(
    candidates: &[ScoredEdge],
    tau: f64,
    ratio: f64,
    seed: u64,
    training: bool,
) -> Result<Vec<GumbelChoice>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::parameter(format!("temperature {tau} must be positive")));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::parameter(format!("sampling ratio {ratio} outside [0, 1]")));
    }
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(c) = candidates.iter().find(|c| !c.torque.is_finite()) {
        return Err(Error::NonFinite(format!("candidate {:?} torque {}", c.edge, c.torque)));
    }

    let lo = candidates.iter().map(|c| c.torque).fold(f64::INFINITY, f64::min);
    let hi = candidates.iter().map(|c| c.torque).fold(f64::NEG_INFINITY, f64::max);
    let normalize = |t: f64| {
        if hi > lo {
            let u = TORQUE_NORM_EPS + (1.0 - 2.0 * TORQUE_NORM_EPS) * (t - lo) / (hi - lo);
            u.clamp(TORQUE_NORM_EPS, 1.0 - TORQUE_NORM_EPS)
        } else {
            0.5
        }
    };

    let keep = (ratio * candidates.len() as f64 + 1e-9).floor() as usize;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[a].torque.total_cmp(&candidates[b].torque).then(a.cmp(&b)));
    order.truncate(keep);

    let gumbel = Gumbel::new(0.0, 1.0).expect("standard Gumbel parameters are valid");
    let mut rng = seed::rng(seed);
    let choices = order
        .into_iter()
        .map(|idx| {
            let ScoredEdge { edge, distance, energy, torque } = candidates[idx];
            let normalized = normalize(torque);
            let (g0, g1) =
                if training { (gumbel.sample(&mut rng), gumbel.sample(&mut rng)) } else { (0.0, 0.0) };
            let (p_discard, p_select) =
                two_way_softmax((normalized.ln() + g0) / tau, ((1.0 - normalized).ln() + g1) / tau);
            GumbelChoice { edge, distance, energy, torque, normalized, p_discard, p_select }
        })
        .collect();
    Ok(choices)
}

fn two_way_softmax(a: f64, b: f64) -> (f64, f64) {
    let m = a.max(b);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    (ea / (ea + eb), eb / (ea + eb))
}
