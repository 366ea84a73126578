use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Edge;
use crate::kernel::{softmax_rows, Matrix};
use crate::torque::EdgeScoreTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// Only for two-class logits with both classes present in the mask.
    pub roc_auc: Option<f64>,
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

pub fn evaluate(logits: &Matrix, labels: &[usize], mask: &[usize]) -> Result<Evaluation> {
    if mask.is_empty() {
        return Err(Error::parameter("evaluation mask is empty"));
    }
    if labels.len() != logits.rows() {
        return Err(Error::structural(format!("{} labels for {} logit rows", labels.len(), logits.rows())));
    }
    if let Some(&i) = mask.iter().find(|&&i| i >= logits.rows()) {
        return Err(Error::structural(format!("mask index {i} out of range")));
    }
    let correct = mask.iter().filter(|&&i| argmax(logits.row(i)) == labels[i]).count();
    let accuracy = correct as f64 / mask.len() as f64;

    let roc_auc = if logits.cols() == 2 {
        let p = softmax_rows(logits);
        let scores: Vec<f64> = mask.iter().map(|&i| p.get(i, 1)).collect();
        let pos: Vec<bool> = mask.iter().map(|&i| labels[i] == 1).collect();
        roc_auc(&scores, &pos)
    } else {
        None
    };
    Ok(Evaluation { accuracy, roc_auc })
}

/// Area under the ROC curve as the normalized rank-sum statistic, with
/// tied scores given their average rank. `None` without both classes.
pub fn roc_auc(scores: &[f64], positives: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), positives.len(), "scores and labels differ in length");
    let n_pos = positives.iter().filter(|&&p| p).count();
    let n_neg = positives.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their mean.
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| positives[k]).count() as f64 * mid;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// How well torque ranks flagged edges above the rest.
pub fn edge_detection_auc(table: &EdgeScoreTable, flagged: impl Fn(Edge) -> bool) -> Option<f64> {
    let scores: Vec<f64> = table.edges().iter().map(|e| e.torque).collect();
    let pos: Vec<bool> = table.edges().iter().map(|e| flagged(e.edge)).collect();
    roc_auc(&scores, &pos)
}
