//! Cross-validated model selection and hold-out scoring.

use serde::{Deserialize, Serialize};

use super::baselines::{train_gaussian_nb, train_knn, GaussianNbModel, KnnModel};
use super::roc::{roc_ovr, RocCurve};
use super::split::{group_holdout_split, group_kfold, holdout_split, stratified_kfold};
use super::tree::{train_extra_trees, ExtraTreesParams, TreeEnsembleModel};
use super::{check_training_input, Classifier, LearnError};
use crate::model::RngSeed;

pub const CV_FOLDS: usize = 5;
pub const HOLDOUT_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelFamily {
    ExtraTrees(ExtraTreesParams),
    Knn { k: usize },
    GaussianNb,
}

impl ModelFamily {
    /// Extra trees with defaults plus the two baselines.
    pub fn standard() -> Vec<ModelFamily> {
        vec![ModelFamily::ExtraTrees(ExtraTreesParams::default()), ModelFamily::Knn { k: 5 }, ModelFamily::GaussianNb]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::ExtraTrees(_) => "extra_trees",
            ModelFamily::Knn { .. } => "knn",
            ModelFamily::GaussianNb => "gaussian_nb",
        }
    }

    pub fn fit(&self, x: &[Vec<f64>], y: &[usize], n_classes: usize, seed: RngSeed) -> Result<FittedModel, LearnError> {
        Ok(match self {
            ModelFamily::ExtraTrees(p) => FittedModel::ExtraTrees(train_extra_trees(x, y, n_classes, p, seed)?),
            ModelFamily::Knn { k } => FittedModel::Knn(train_knn(x, y, n_classes, *k)?),
            ModelFamily::GaussianNb => FittedModel::GaussianNb(train_gaussian_nb(x, y, n_classes)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    ExtraTrees(TreeEnsembleModel),
    Knn(KnnModel),
    GaussianNb(GaussianNbModel),
}

impl FittedModel {
    fn inner(&self) -> &dyn Classifier {
        match self {
            FittedModel::ExtraTrees(m) => m,
            FittedModel::Knn(m) => m,
            FittedModel::GaussianNb(m) => m,
        }
    }
}

impl Classifier for FittedModel {
    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, LearnError> {
        self.inner().predict_proba(x)
    }
}

/// How the hold-out and folds are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitStrategy {
    /// Stratified random rows.
    RowWise,
    /// Whole subjects; one group label per row.
    SubjectWise(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCv {
    pub family: String,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRoc {
    pub class: usize,
    pub curve: RocCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub families: Vec<FamilyCv>,
    pub selected_family: String,
    pub fold_accuracies: Vec<f64>,
    pub mean_cv_accuracy: f64,
    pub holdout_accuracy: f64,
    /// Rows are true classes, columns predictions.
    pub confusion: Vec<Vec<usize>>,
    pub roc: Vec<ClassRoc>,
    pub n_train: usize,
    pub n_test: usize,
    /// Rows with missing features removed before evaluation; set by the caller.
    pub n_dropped: usize,
}

pub struct Evaluation {
    pub report: EvalReport,
    /// Selected family refitted on the whole training partition.
    pub model: FittedModel,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Index of the largest probability; ties go to the lower class.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy(model: &dyn Classifier, x: &[Vec<f64>], y: &[usize]) -> Result<f64, LearnError> {
    let mut correct = 0;
    for (r, &c) in x.iter().zip(y) {
        if argmax(&model.predict_proba(r)?) == c {
            correct += 1;
        }
    }
    Ok(correct as f64 / x.len() as f64)
}

fn pick<T: Clone>(v: &[T], rows: &[usize]) -> Vec<T> {
    rows.iter().map(|&i| v[i].clone()).collect()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (m, (v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / v.len() as f64).sqrt())
}

/// Carves out the hold-out, cross-validates every family on the rest,
/// refits the best one (mean CV accuracy, then lower spread, then list
/// order) on the whole training partition and scores the hold-out.
pub fn evaluate(
    families: &[ModelFamily],
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    split: &SplitStrategy,
    seed: RngSeed,
) -> Result<Evaluation, LearnError> {
    check_training_input(x, y, n_classes)?;
    if families.is_empty() {
        return Err(LearnError::InvalidParams("no model family to evaluate".into()));
    }
    let (train_rows, test_rows, folds) = match split {
        SplitStrategy::RowWise => {
            let (tr, te) = holdout_split(y, HOLDOUT_FRACTION, seed.derive(1))?;
            let folds = stratified_kfold(&pick(y, &tr), CV_FOLDS, seed.derive(2))?;
            (tr, te, folds)
        }
        SplitStrategy::SubjectWise(groups) => {
            if groups.len() != y.len() {
                return Err(LearnError::DimensionMismatch { expected: y.len(), got: groups.len() });
            }
            let (tr, te) = group_holdout_split(groups, HOLDOUT_FRACTION, seed.derive(1))?;
            let folds = group_kfold(&pick(groups, &tr), CV_FOLDS, seed.derive(2))?;
            (tr, te, folds)
        }
    };
    if test_rows.is_empty() {
        return Err(LearnError::EmptyMatrix);
    }
    let x_tr = pick(x, &train_rows);
    let y_tr = pick(y, &train_rows);

    let mut cv = Vec::with_capacity(families.len());
    for fam in families {
        let mut accs = Vec::with_capacity(CV_FOLDS);
        for k in 0..CV_FOLDS {
            let fit_rows: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] != k).collect();
            let val_rows: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] == k).collect();
            let model = fam.fit(&pick(&x_tr, &fit_rows), &pick(&y_tr, &fit_rows), n_classes, seed.derive(100 + k as u64))?;
            accs.push(accuracy(&model, &pick(&x_tr, &val_rows), &pick(&y_tr, &val_rows))?);
        }
        let (mean_accuracy, std_accuracy) = mean_std(&accs);
        cv.push(FamilyCv { family: fam.name().into(), fold_accuracies: accs, mean_accuracy, std_accuracy });
    }
    let mut best = 0;
    for (i, c) in cv.iter().enumerate().skip(1) {
        let b = &cv[best];
        if c.mean_accuracy > b.mean_accuracy || (c.mean_accuracy == b.mean_accuracy && c.std_accuracy < b.std_accuracy) {
            best = i;
        }
    }

    let model = families[best].fit(&x_tr, &y_tr, n_classes, seed.derive(200))?;
    let x_te = pick(x, &test_rows);
    let y_te = pick(y, &test_rows);
    let proba = x_te.iter().map(|r| model.predict_proba(r)).collect::<Result<Vec<_>, _>>()?;
    let mut confusion = vec![vec![0; n_classes]; n_classes];
    for (p, &c) in proba.iter().zip(&y_te) {
        confusion[c][argmax(p)] += 1;
    }
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    let roc = roc_ovr(&proba, &y_te, n_classes)?
        .into_iter()
        .enumerate()
        .map(|(class, curve)| ClassRoc { class, curve })
        .collect();

    let report = EvalReport {
        split: match split {
            SplitStrategy::RowWise => "row_wise".into(),
            SplitStrategy::SubjectWise(_) => "subject_wise".into(),
        },
        selected_family: cv[best].family.clone(),
        fold_accuracies: cv[best].fold_accuracies.clone(),
        mean_cv_accuracy: cv[best].mean_accuracy,
        families: cv,
        holdout_accuracy: correct as f64 / y_te.len() as f64,
        confusion,
        roc,
        n_train: train_rows.len(),
        n_test: test_rows.len(),
        n_dropped: 0,
    };
    Ok(Evaluation { report, model, train_rows, test_rows })
}
