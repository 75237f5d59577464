//! Filtering, windowing and feature extraction over whole subjects.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{filter_signal, segment_windows, DspError, FilterSpec, WindowSpec};
use crate::hrv::{detect_beats_in, compute_features, FeatureVector, HrvError};
use crate::ingest::{Dataset, SubjectBundle};
use crate::model::{Modality, WindowedSegment};
use crate::table::FeatureRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub window: WindowSpec,
    pub ecg_filter: FilterSpec,
    pub ppg_filter: FilterSpec,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self { window: WindowSpec::default(), ecg_filter: FilterSpec::ecg_default(), ppg_filter: FilterSpec::ppg_default() }
    }
}

fn window_row(w: &WindowedSegment) -> (FeatureRow, Option<HrvError>) {
    let result: Result<FeatureVector, HrvError> =
        detect_beats_in(w).and_then(|b| compute_features(&b, w.sample_rate_hz));
    let (features, err) = match result {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e)),
    };
    (FeatureRow::new(w.window_id, w.subject_id.clone(), w.modality, w.label, features), err)
}

/// One ECG row and one PPG row per labelled window, in window order. A
/// window whose beats cannot be measured yields a row of missing values.
pub fn extract_subject(bundle: &SubjectBundle, cfg: &ExtractConfig) -> Result<Vec<FeatureRow>, DspError> {
    let ecg = filter_signal(&bundle.ecg, &cfg.ecg_filter)?;
    let ppg = filter_signal(&bundle.ppg, &cfg.ppg_filter)?;
    let windows = segment_windows(&ecg, &ppg, &bundle.annotations, &cfg.window)?;
    Ok(windows
        .par_iter()
        .flat_map_iter(|w| [window_row(&w.ecg).0, window_row(&w.ppg).0])
        .collect())
}

/// All subjects, ordered by subject, window and modality (ECG first).
pub fn extract_dataset(dataset: &Dataset, cfg: &ExtractConfig) -> Result<Vec<FeatureRow>, DspError> {
    let per_subject = dataset
        .subjects
        .par_iter()
        .map(|s| extract_subject(s, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<FeatureRow> = per_subject.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.subject_id.as_str(), a.window_id, a.modality != Modality::Ecg)
            .cmp(&(b.subject_id.as_str(), b.window_id, b.modality != Modality::Ecg))
    });
    Ok(rows)
}
