use serde::{Deserialize, Serialize};

use super::label::resolve_label;
use super::DspError;
use crate::model::{AnnotationTrack, SignalRecord, WindowedSegment};

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub window_len_s: f64,
    pub overlap_s: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { window_len_s: 10.0, overlap_s: 1.0 }
    }
}

impl WindowSpec {
    pub fn stride_s(&self) -> f64 {
        self.window_len_s - self.overlap_s
    }

    pub fn validate(&self) -> Result<(), DspError> {
        let ok = self.window_len_s > 0.0
            && self.overlap_s >= 0.0
            && self.overlap_s < self.window_len_s
            && self.window_len_s.is_finite();
        if ok {
            Ok(())
        } else {
            Err(DspError::InvalidWindowSpec { len_s: self.window_len_s, overlap_s: self.overlap_s })
        }
    }
}

/// Window start offsets (seconds from the recording start) that fit entirely
/// inside `duration_s`.
pub fn window_starts(duration_s: f64, spec: &WindowSpec) -> Vec<f64> {
    if duration_s + TIME_EPS < spec.window_len_s {
        return Vec::new();
    }
    let count = ((duration_s - spec.window_len_s) / spec.stride_s() + TIME_EPS).floor() as usize + 1;
    (0..count).map(|k| k as f64 * spec.stride_s()).collect()
}

/// Temporally aligned ECG and PPG windows sharing `window_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedWindow {
    pub ecg: WindowedSegment,
    pub ppg: WindowedSegment,
}

fn slice_range(offset_s: f64, len_s: f64, rate: f64) -> (usize, usize) {
    let start = (offset_s * rate).round() as usize;
    let len = (len_s * rate + TIME_EPS).floor() as usize;
    (start, start + len)
}

fn cut(record: &SignalRecord, window_id: usize, offset_s: f64, window_start_s: f64, len_s: f64, label: crate::model::AffectLabel) -> Option<WindowedSegment> {
    let (a, b) = slice_range(offset_s, len_s, record.sample_rate_hz);
    (b <= record.samples.len()).then(|| WindowedSegment {
        window_id,
        subject_id: record.subject_id.clone(),
        modality: record.modality,
        sample_rate_hz: record.sample_rate_hz,
        samples: record.samples[a..b].to_vec(),
        label,
        window_start_s,
    })
}

/// Slices both records into aligned windows and attaches resolved labels.
///
/// Windows start at `start_time + k * stride`; each signal is cut at its own
/// rate. Windows whose label resolves to a drop are skipped but keep their
/// index `k` as `window_id`.
pub fn segment_windows(
    ecg: &SignalRecord,
    ppg: &SignalRecord,
    annotations: &AnnotationTrack,
    spec: &WindowSpec,
) -> Result<Vec<AlignedWindow>, DspError> {
    spec.validate()?;
    if (ecg.start_time_s - ppg.start_time_s).abs() > TIME_EPS {
        return Err(DspError::Misaligned(format!(
            "ECG starts at {} s, PPG at {} s",
            ecg.start_time_s, ppg.start_time_s
        )));
    }
    if ecg.subject_id != ppg.subject_id {
        return Err(DspError::Misaligned(format!(
            "subjects differ: {} vs {}",
            ecg.subject_id, ppg.subject_id
        )));
    }
    let duration = ecg.duration_s().min(ppg.duration_s());
    let starts = window_starts(duration, spec);
    if starts.is_empty() {
        return Err(DspError::NoCompleteWindow);
    }

    let ann_len = annotations.values.len();
    let mut out = Vec::with_capacity(starts.len());
    for (k, offset) in starts.into_iter().enumerate() {
        let window_start_s = ecg.start_time_s + offset;
        let ann_offset = window_start_s - annotations.start_time_s;
        if ann_offset < -TIME_EPS {
            continue;
        }
        let (a0, a1) = slice_range(ann_offset.max(0.0), spec.window_len_s, annotations.sample_rate_hz);
        let (a0, a1) = (a0.min(ann_len), a1.min(ann_len));
        let Some(label) = resolve_label(&annotations.values, a0, a1)? else {
            continue;
        };
        let (Some(e), Some(p)) = (
            cut(ecg, k, offset, window_start_s, spec.window_len_s, label),
            cut(ppg, k, offset, window_start_s, spec.window_len_s, label),
        ) else {
            break;
        };
        out.push(AlignedWindow { ecg: e, ppg: p });
    }
    Ok(out)
}
