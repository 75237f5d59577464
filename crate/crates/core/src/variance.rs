//! Inter-signal feature variance and per-state feature distributions.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::hrv::{FEATURE_COUNT, FEATURE_NAMES};
use crate::model::{AffectLabel, Modality};
use crate::table::FeatureRow;

/// Smallest group size for which distribution statistics are reported.
pub const MIN_GROUP_SIZE: usize = 4;
pub const TUKEY_K: f64 = 1.5;
pub const DEFAULT_OVERLAP_FLAG: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VarianceError {
    #[error("no window is present in both signals")]
    NoAlignedWindows,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffEntry {
    pub subject_id: String,
    pub window_id: usize,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureDiffSeries {
    pub feature: &'static str,
    pub entries: Vec<DiffEntry>,
    pub mean: f64,
    pub max: f64,
    /// Aligned windows where either side was missing.
    pub missing_count: usize,
    /// Mean absolute feature value over both signals on the compared windows.
    pub pooled_mean: f64,
    /// `mean / pooled_mean`; `None` when nothing was compared or the pool is zero.
    pub normalized_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterSignalVariance {
    pub aligned_windows: usize,
    pub features: Vec<FeatureDiffSeries>,
}

impl InterSignalVariance {
    /// Mean normalized variance across features that have one.
    pub fn mean_normalized(&self) -> f64 {
        let vals: Vec<f64> = self.features.iter().filter_map(|f| f.normalized_mean).collect();
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureDiffSeries> {
        self.features.iter().find(|f| f.feature == name)
    }
}

/// Per-window `|ECG - PPG|` for every feature, paired on
/// `(subject, window_id)` and ordered by that key.
pub fn inter_signal_variance(ecg: &[FeatureRow], ppg: &[FeatureRow]) -> Result<InterSignalVariance, VarianceError> {
    let other: BTreeMap<(&str, usize), &FeatureRow> = ppg.iter().map(|r| (r.key(), r)).collect();
    let mut pairs: Vec<(&FeatureRow, &FeatureRow)> =
        ecg.iter().filter_map(|e| other.get(&e.key()).map(|p| (e, *p))).collect();
    if pairs.is_empty() {
        return Err(VarianceError::NoAlignedWindows);
    }
    pairs.sort_by(|a, b| a.0.key().cmp(&b.0.key()));

    let features = (0..FEATURE_COUNT)
        .map(|f| {
            let mut entries = Vec::new();
            let mut missing_count = 0;
            let mut pool = 0.0;
            for (e, p) in &pairs {
                match (e.features[f], p.features[f]) {
                    (Some(a), Some(b)) => {
                        entries.push(DiffEntry { subject_id: e.subject_id.clone(), window_id: e.window_id, abs_diff: (a - b).abs() });
                        pool += a.abs() + b.abs();
                    }
                    _ => missing_count += 1,
                }
            }
            let n = entries.len();
            let mean = if n == 0 { 0.0 } else { entries.iter().map(|d| d.abs_diff).sum::<f64>() / n as f64 };
            let max = entries.iter().map(|d| d.abs_diff).fold(0.0, f64::max);
            let pooled_mean = if n == 0 { 0.0 } else { pool / (2 * n) as f64 };
            let normalized_mean = (n > 0 && pooled_mean > 0.0).then(|| mean / pooled_mean);
            FeatureDiffSeries { feature: FEATURE_NAMES[f], entries, mean, max, missing_count, pooled_mean, normalized_mean }
        })
        .collect();
    Ok(InterSignalVariance { aligned_windows: pairs.len(), features })
}

/// Quantile by linear interpolation between closest ranks of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub max: f64,
    pub iqr: f64,
    pub mean: f64,
    pub std: f64,
    pub outlier_count: usize,
    pub outlier_window_ids: Vec<(String, usize)>,
}

/// Order statistics, population moments and Tukey-fence outliers.
pub fn summarize(values: &[(String, usize, f64)]) -> Summary {
    let mut sorted: Vec<f64> = values.iter().map(|v| v.2).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let std = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let (q1, q2, q3) = (quantile_sorted(&sorted, 0.25), quantile_sorted(&sorted, 0.5), quantile_sorted(&sorted, 0.75));
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - TUKEY_K * iqr, q3 + TUKEY_K * iqr);
    let mut outlier_window_ids: Vec<(String, usize)> = values
        .iter()
        .filter(|v| v.2 < lo || v.2 > hi)
        .map(|v| (v.0.clone(), v.1))
        .collect();
    outlier_window_ids.sort();
    Summary {
        min: sorted[0],
        q1,
        q2,
        q3,
        max: sorted[sorted.len() - 1],
        iqr,
        mean,
        std,
        outlier_count: outlier_window_ids.len(),
        outlier_window_ids,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub feature: &'static str,
    pub label: AffectLabel,
    pub modality: Modality,
    pub n: usize,
    /// `None` when the group has fewer than [`MIN_GROUP_SIZE`] values.
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateFeatureStats {
    pub groups: Vec<GroupStats>,
}

impl StateFeatureStats {
    pub fn get(&self, feature: &str, label: AffectLabel, modality: Modality) -> Option<&GroupStats> {
        self.groups.iter().find(|g| g.feature == feature && g.label == label && g.modality == modality)
    }
}

/// Statistics per (modality, state, feature), ordered by that key.
pub fn state_feature_stats(rows: &[FeatureRow]) -> StateFeatureStats {
    let mut groups: BTreeMap<(Modality, AffectLabel, usize), Vec<(String, usize, f64)>> = BTreeMap::new();
    for r in rows {
        for (f, v) in r.features.iter().enumerate() {
            let entry = groups.entry((r.modality, r.label, f)).or_default();
            if let Some(v) = v {
                entry.push((r.subject_id.clone(), r.window_id, *v));
            }
        }
    }
    let groups = groups
        .into_iter()
        .map(|((modality, label, f), values)| GroupStats {
            feature: FEATURE_NAMES[f],
            label,
            modality,
            n: values.len(),
            summary: (values.len() >= MIN_GROUP_SIZE).then(|| summarize(&values)),
        })
        .collect();
    StateFeatureStats { groups }
}

/// Overlap of two interquartile boxes relative to the shorter one.
pub fn box_overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (short, long) = if a.1 - a.0 <= b.1 - b.0 { (a, b) } else { (b, a) };
    let short_len = short.1 - short.0;
    if short_len <= 0.0 {
        return if short.0 >= long.0 && short.0 <= long.1 { 1.0 } else { 0.0 };
    }
    let inter = (short.1.min(long.1) - short.0.max(long.0)).max(0.0);
    inter / short_len
}

/// IQR-box overlap of two states for one feature and modality; `None` when
/// either group lacks statistics.
pub fn state_overlap_score(stats: &StateFeatureStats, feature: &str, modality: Modality, a: AffectLabel, b: AffectLabel) -> Option<f64> {
    let sa = stats.get(feature, a, modality)?.summary.as_ref()?;
    let sb = stats.get(feature, b, modality)?.summary.as_ref()?;
    Some(box_overlap((sa.q1, sa.q3), (sb.q1, sb.q3)))
}
