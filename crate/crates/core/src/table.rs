//! Per-window feature rows shared by the analysis stages.

use serde::{Deserialize, Serialize};

use crate::hrv::{FeatureVector, FEATURE_COUNT};
use crate::model::{AffectLabel, Modality};

/// Features of one window of one signal; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub window_id: usize,
    pub subject_id: String,
    pub modality: Modality,
    pub label: AffectLabel,
    pub features: [Option<f64>; FEATURE_COUNT],
}

impl FeatureRow {
    pub fn new(window_id: usize, subject_id: impl Into<String>, modality: Modality, label: AffectLabel, features: Option<FeatureVector>) -> Self {
        Self {
            window_id,
            subject_id: subject_id.into(),
            modality,
            label,
            features: features.map_or([None; FEATURE_COUNT], |f| f.values()),
        }
    }

    /// All features present.
    pub fn complete(&self) -> Option<[f64; FEATURE_COUNT]> {
        let mut out = [0.0; FEATURE_COUNT];
        for (o, v) in out.iter_mut().zip(&self.features) {
            *o = (*v)?;
        }
        Some(out)
    }

    pub fn key(&self) -> (&str, usize) {
        (&self.subject_id, self.window_id)
    }
}

/// Complete rows of one modality as a feature matrix plus labels.
/// Returns the number of rows dropped for missing values.
pub fn complete_rows(rows: &[FeatureRow], modality: Modality) -> (Vec<[f64; FEATURE_COUNT]>, Vec<AffectLabel>, Vec<&FeatureRow>, usize) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = 0;
    for r in rows.iter().filter(|r| r.modality == modality) {
        match r.complete() {
            Some(v) => {
                x.push(v);
                y.push(r.label);
                kept.push(r);
            }
            None => dropped += 1,
        }
    }
    (x, y, kept, dropped)
}

/// Complete rows of one modality with labels mapped to class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    /// Class index to label, in label order.
    pub classes: Vec<AffectLabel>,
    pub subjects: Vec<String>,
    pub window_ids: Vec<usize>,
    pub dropped: usize,
}

impl LabeledMatrix {
    pub fn from_rows(rows: &[FeatureRow], modality: Modality) -> Self {
        let (x, labels, kept, dropped) = complete_rows(rows, modality);
        let mut classes = labels.clone();
        classes.sort();
        classes.dedup();
        let y = labels.iter().map(|l| classes.binary_search(l).expect("label present")).collect();
        Self {
            x: x.into_iter().map(|r| r.to_vec()).collect(),
            y,
            classes,
            subjects: kept.iter().map(|r| r.subject_id.clone()).collect(),
            window_ids: kept.iter().map(|r| r.window_id).collect(),
            dropped,
        }
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name().to_string()).collect()
    }
}
