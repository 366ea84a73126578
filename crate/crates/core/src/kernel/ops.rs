use rand::Rng as _;

use super::Matrix;
use crate::error::{Error, Result};
use crate::seed;

pub fn relu(m: &Matrix) -> Matrix {
    m.map(|v| v.max(0.0))
}

/// Inverted-dropout mask: entries are `0` with probability `rate`, otherwise
/// `1 / (1 - rate)`.
pub fn dropout_mask(rows: usize, cols: usize, rate: f64, seed: u64) -> Result<Matrix> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::parameter(format!("dropout rate {rate} outside [0, 1)")));
    }
    let keep = 1.0 / (1.0 - rate);
    let mut rng = seed::rng(seed);
    let data = (0..rows * cols).map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep }).collect();
    Matrix::new(rows, cols, data)
}

pub fn dropout(m: &Matrix, rate: f64, training: bool, seed: u64) -> Result<Matrix> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::parameter(format!("dropout rate {rate} outside [0, 1)")));
    }
    if !training || rate == 0.0 {
        return Ok(m.clone());
    }
    let mask = dropout_mask(m.rows(), m.cols(), rate, seed)?;
    m.zip_map(&mask, |a, b| a * b)
}

/// Row-wise `log Σ_j exp(m_ij)` as an `n×1` column, max-shifted for stability.
pub fn logsumexp_rows(m: &Matrix) -> Result<Matrix> {
    if m.cols() == 0 {
        return Err(Error::structural("logsumexp_rows needs at least one column"));
    }
    let vals: Vec<f64> = (0..m.rows()).map(|i| lse(m.row(i))).collect();
    Ok(Matrix::column(&vals))
}

pub(crate) fn lse(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for i in 0..m.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            z += *v;
        }
        row.iter_mut().for_each(|v| *v /= z);
    }
    out
}

/// Mean cross-entropy over the masked rows and its gradient w.r.t. `logits`.
pub fn softmax_xent(logits: &Matrix, labels: &[usize], mask: &[usize]) -> Result<(f64, Matrix)> {
    if mask.is_empty() {
        return Err(Error::parameter("cross-entropy mask is empty"));
    }
    if labels.len() != logits.rows() {
        return Err(Error::structural(format!("{} labels for {} logit rows", labels.len(), logits.rows())));
    }
    let c = logits.cols();
    let scale = 1.0 / mask.len() as f64;
    let mut grad = Matrix::zeros(logits.rows(), c);
    let mut loss = 0.0;
    for &i in mask {
        let y = labels[i];
        if y >= c {
            return Err(Error::parameter(format!("label {y} of node {i} outside [0, {c})")));
        }
        let row = logits.row(i);
        let z = lse(row);
        loss += z - row[y];
        let g = grad.row_mut(i);
        for (gj, &v) in g.iter_mut().zip(row) {
            *gj = (v - z).exp() * scale;
        }
        g[y] -= scale;
    }
    Ok((loss * scale, grad))
}
