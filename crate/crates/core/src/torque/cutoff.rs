use crate::error::{Error, Result};

use super::EdgeScoreTable;

/// Fraction of high-metric edges captured by the top-`k` of the torque-sorted
/// list: `|High ∩ Top_k| / |High|`, or `0` when no edge is high on all three
/// metrics.
pub fn anomalous_weight(table: &EdgeScoreTable, k: usize) -> Result<f64> {
    if k == 0 || k > table.len() {
        return Err(Error::parameter(format!("k = {k} outside [1, {}]", table.len())));
    }
    let high = table.high_count();
    if high == 0 {
        return Ok(0.0);
    }
    let captured = table.order()[..k].iter().filter(|&&id| table.is_high(id)).count();
    Ok(captured as f64 / high as f64)
}

/// Weighted gap `μ_k · T_k / (T_{k+1} + δ)` between ranks `k` and `k+1`
/// (1-based). `k = 0` is the remove-nothing sentinel with gap `0`.
pub fn torque_gap(table: &EdgeScoreTable, k: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if k + 1 > table.len() {
        return Err(Error::parameter(format!("gap index {k} needs k <= K-1 = {}", table.len() - 1)));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let mu = anomalous_weight(table, k)?;
    Ok(gap_value(mu, table.ranked(k).torque, table.ranked(k + 1).torque, delta))
}

#[inline]
fn gap_value(mu: f64, upper: f64, lower: f64, delta: f64) -> f64 {
    if mu == 0.0 {
        0.0
    } else {
        mu * upper / (lower + delta)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::parameter(format!("delta {delta} must be positive")));
    }
    Ok(())
}

/// All gaps `G_{k,k+1}` for `k = 0..K-1` in one pass.
pub fn torque_gaps(table: &EdgeScoreTable, delta: f64) -> Result<Vec<f64>> {
    check_delta(delta)?;
    let k_total = table.len();
    let high = table.high_count();
    let mut gaps = vec![0.0; k_total];
    if high == 0 {
        return Ok(gaps);
    }
    let mut captured = 0usize;
    for (k, gap) in gaps.iter_mut().enumerate().skip(1) {
        if table.is_high(table.order()[k - 1]) {
            captured += 1;
        }
        let mu = captured as f64 / high as f64;
        *gap = gap_value(mu, table.ranked(k).torque, table.ranked(k + 1).torque, delta);
    }
    Ok(gaps)
}

/// Number of top-torque edges to cut: the argmax of the gap sequence,
/// ties resolved toward fewer removals.
pub fn find_cutoff(table: &EdgeScoreTable, delta: f64) -> Result<usize> {
    let gaps = torque_gaps(table, delta)?;
    let mut best = 0usize;
    for (k, &g) in gaps.iter().enumerate().skip(1) {
        if g > gaps[best] {
            best = k;
        }
    }
    Ok(best)
}
