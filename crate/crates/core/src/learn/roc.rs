//! One-versus-rest ROC curves.

use serde::{Deserialize, Serialize};

use super::LearnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC of `scores` against binary `positive`. Equal scores form one
/// threshold, so ties produce a diagonal step.
pub fn roc_curve(scores: &[f64], positive: &[bool]) -> Result<RocCurve, LearnError> {
    if scores.len() != positive.len() {
        return Err(LearnError::DimensionMismatch { expected: scores.len(), got: positive.len() });
    }
    let p = positive.iter().filter(|&&b| b).count();
    let n = positive.len() - p;
    if p == 0 || n == 0 {
        return Err(LearnError::SingleClassInput);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    let auc = points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5).sum();
    Ok(RocCurve { points, auc })
}

/// One curve per class, scoring each row by that class's probability.
pub fn roc_ovr(proba: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<Vec<RocCurve>, LearnError> {
    (0..n_classes)
        .map(|c| {
            let scores: Vec<f64> = proba.iter().map(|p| p[c]).collect();
            let pos: Vec<bool> = y.iter().map(|&l| l == c).collect();
            roc_curve(&scores, &pos)
        })
        .collect()
}
