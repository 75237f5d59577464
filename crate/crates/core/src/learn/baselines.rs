//! k-nearest-neighbour and Gaussian naive Bayes baselines.

use serde::{Deserialize, Serialize};

use super::{check_training_input, Classifier, LearnError};

/// Per-feature standardisation fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl ZScore {
    /// Constant features keep a unit scale so they map to zero.
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let n = x.len() as f64;
        let m = x[0].len();
        let means: Vec<f64> = (0..m).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let stds = (0..m)
            .map(|j| {
                let s = (x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n).sqrt();
                if s > 0.0 { s } else { 1.0 }
            })
            .collect();
        Self { means, stds }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.means).zip(&self.stds).map(|((v, m), s)| (v - m) / s).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub scaler: ZScore,
    pub train: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

pub fn train_knn(x: &[Vec<f64>], y: &[usize], n_classes: usize, k: usize) -> Result<KnnModel, LearnError> {
    check_training_input(x, y, n_classes)?;
    if k == 0 {
        return Err(LearnError::InvalidParams("k must be positive".into()));
    }
    let scaler = ZScore::fit(x);
    Ok(KnnModel { k, train: x.iter().map(|r| scaler.transform(r)).collect(), scaler, labels: y.to_vec(), n_classes })
}

impl Classifier for KnnModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn n_features(&self) -> usize {
        self.scaler.means.len()
    }

    /// Vote shares of the k nearest rows; distance ties resolve by row order.
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, LearnError> {
        if x.len() != self.n_features() {
            return Err(LearnError::DimensionMismatch { expected: self.n_features(), got: x.len() });
        }
        let q = self.scaler.transform(x);
        let mut d: Vec<(f64, usize)> = self
            .train
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = self.k.min(d.len());
        let mut out = vec![0.0; self.n_classes];
        for &(_, i) in &d[..k] {
            out[self.labels[i]] += 1.0 / k as f64;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    /// Log prior per class; `-inf` for classes absent from training.
    pub log_priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub vars: Vec<Vec<f64>>,
}

pub fn train_gaussian_nb(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<GaussianNbModel, LearnError> {
    check_training_input(x, y, n_classes)?;
    let m = x[0].len();
    let n = x.len() as f64;
    // variance floor relative to the widest feature, as is customary
    let widest = (0..m)
        .map(|j| {
            let mu = x.iter().map(|r| r[j]).sum::<f64>() / n;
            x.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / n
        })
        .fold(0.0, f64::max);
    let eps = 1e-9 * widest.max(f64::MIN_POSITIVE);
    let mut log_priors = vec![f64::NEG_INFINITY; n_classes];
    let mut means = vec![vec![0.0; m]; n_classes];
    let mut vars = vec![vec![1.0; m]; n_classes];
    for c in 0..n_classes {
        let rows: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
        if rows.is_empty() {
            continue;
        }
        let nc = rows.len() as f64;
        log_priors[c] = (nc / n).ln();
        for j in 0..m {
            let mu = rows.iter().map(|r| r[j]).sum::<f64>() / nc;
            means[c][j] = mu;
            vars[c][j] = rows.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / nc + eps;
        }
    }
    Ok(GaussianNbModel { log_priors, means, vars })
}

impl Classifier for GaussianNbModel {
    fn n_classes(&self) -> usize {
        self.log_priors.len()
    }

    fn n_features(&self) -> usize {
        self.means[0].len()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, LearnError> {
        if x.len() != self.n_features() {
            return Err(LearnError::DimensionMismatch { expected: self.n_features(), got: x.len() });
        }
        let joint: Vec<f64> = (0..self.n_classes())
            .map(|c| {
                if self.log_priors[c] == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                self.log_priors[c]
                    + x.iter()
                        .zip(&self.means[c])
                        .zip(&self.vars[c])
                        .map(|((v, mu), var)| -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (v - mu).powi(2) / var))
                        .sum::<f64>()
            })
            .collect();
        let top = joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = joint.iter().map(|j| (j - top).exp()).collect();
        let total: f64 = w.iter().sum();
        Ok(w.iter().map(|v| v / total).collect())
    }
}
