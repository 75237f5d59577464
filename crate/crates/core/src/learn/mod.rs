//! Classifiers, data splits and evaluation.

mod baselines;
mod eval;
mod roc;
mod split;
mod tree;

pub use baselines::{train_gaussian_nb, train_knn, GaussianNbModel, KnnModel, ZScore};
pub use eval::{accuracy, argmax, evaluate, ClassRoc, EvalReport, FamilyCv, FittedModel, ModelFamily, SplitStrategy, CV_FOLDS, HOLDOUT_FRACTION};
pub use roc::{roc_curve, roc_ovr, RocCurve};
pub use split::{group_holdout_split, group_kfold, holdout_split, stratified_kfold};
pub use tree::{train_extra_trees, ExtraTreesParams, Node, Tree, TreeEnsembleModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnError {
    #[error("training labels contain a single class")]
    SingleClassInput,
    #[error("feature matrix is empty")]
    EmptyMatrix,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("class {class} has {count} rows, fewer than k = {k}")]
    ClassSmallerThanK { class: usize, count: usize, k: usize },
    #[error("{groups} groups cannot fill {k} folds")]
    TooFewGroups { groups: usize, k: usize },
    #[error("label {label} outside 0..{n_classes}")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// A fitted probabilistic classifier.
pub trait Classifier: Send + Sync {
    fn n_classes(&self) -> usize;
    fn n_features(&self) -> usize;
    /// Class probabilities in class-index order.
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, LearnError>;
}

pub(crate) fn check_training_input(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<(), LearnError> {
    if x.is_empty() || x[0].is_empty() {
        return Err(LearnError::EmptyMatrix);
    }
    if x.len() != y.len() {
        return Err(LearnError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let m = x[0].len();
    for (row, r) in x.iter().enumerate() {
        if r.len() != m {
            return Err(LearnError::DimensionMismatch { expected: m, got: r.len() });
        }
        if let Some(col) = r.iter().position(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite { row, col });
        }
    }
    if let Some(&label) = y.iter().find(|&&c| c >= n_classes) {
        return Err(LearnError::LabelOutOfRange { label, n_classes });
    }
    if y.iter().all(|&c| c == y[0]) {
        return Err(LearnError::SingleClassInput);
    }
    Ok(())
}
