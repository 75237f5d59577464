//! Adaptive moving-average peak detection for filtered ECG and PPG windows.

use super::HrvError;
use crate::model::WindowedSegment;

/// Elevation factors tried against the rolling mean, ascending.
pub const ELEVATION_FACTORS: [f64; 8] = [1.05, 1.10, 1.20, 1.30, 1.50, 2.00, 2.50, 3.00];
pub const ROLLING_SPAN_S: f64 = 0.75;
pub const BPM_RANGE: (f64, f64) = (40.0, 180.0);
/// Physiologically plausible RR band, milliseconds.
pub const RR_RANGE_MS: (f64, f64) = (300.0, 2000.0);

#[derive(Debug, Clone, PartialEq)]
pub struct BeatSeries {
    pub peak_indices: Vec<usize>,
    pub rr_ms: Vec<f64>,
    pub accepted: Vec<bool>,
}

impl BeatSeries {
    /// Builds the RR series and plausibility mask from ascending peak indices.
    pub fn from_peaks(peak_indices: Vec<usize>, sample_rate_hz: f64) -> Self {
        let rr_ms: Vec<f64> = peak_indices
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64 * 1000.0 / sample_rate_hz)
            .collect();
        let accepted = rr_ms
            .iter()
            .map(|&r| (RR_RANGE_MS.0..=RR_RANGE_MS.1).contains(&r))
            .collect();
        Self { peak_indices, rr_ms, accepted }
    }

    pub fn accepted_count(&self) -> usize {
        self.accepted.iter().filter(|&&a| a).count()
    }
}

/// Centred moving average over `span` samples; shrinks at the edges.
fn rolling_mean(x: &[f64], span: usize) -> Vec<f64> {
    let half = span / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in x {
        acc += v;
        prefix.push(acc);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Argmax of every contiguous run where `x > factor * baseline`. A maximum
/// on the first or last sample is a truncated pulse, not a peak.
fn candidate_peaks(x: &[f64], baseline: &[f64], factor: f64) -> Vec<usize> {
    let mut peaks = Vec::new();
    let mut best: Option<usize> = None;
    for (i, (&v, &m)) in x.iter().zip(baseline).enumerate() {
        if v > factor * m {
            best = match best {
                Some(b) if x[b] >= v => Some(b),
                _ => Some(i),
            };
        } else if let Some(b) = best.take() {
            peaks.push(b);
        }
    }
    peaks.extend(best);
    peaks.retain(|&i| i > 0 && i + 1 < x.len());
    peaks
}

fn pop_std(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Detects beats in a filtered window sampled at `sample_rate_hz`.
///
/// Every elevation factor yields a candidate peak set; a candidate is
/// plausible when its peak count implies a rate inside [`BPM_RANGE`]. Among
/// plausible candidates the one with the smallest RR standard deviation wins,
/// ties going to the smallest factor.
pub fn detect_beats(samples: &[f64], sample_rate_hz: f64) -> Result<BeatSeries, HrvError> {
    if samples.is_empty() {
        return Err(HrvError::NoPlausiblePeaks);
    }
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = samples.iter().map(|v| v - min).collect();
    let span = ((ROLLING_SPAN_S * sample_rate_hz).round() as usize).max(1);
    let baseline = rolling_mean(&shifted, span);
    let duration_min = samples.len() as f64 / sample_rate_hz / 60.0;

    let mut best: Option<(f64, Vec<usize>)> = None;
    for &factor in &ELEVATION_FACTORS {
        let peaks = candidate_peaks(&shifted, &baseline, factor);
        if peaks.len() < 3 {
            continue;
        }
        let bpm = peaks.len() as f64 / duration_min;
        if !(BPM_RANGE.0..=BPM_RANGE.1).contains(&bpm) {
            continue;
        }
        let rr: Vec<f64> = peaks.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
        let sd = pop_std(&rr);
        if best.as_ref().is_none_or(|(s, _)| sd < *s) {
            best = Some((sd, peaks));
        }
    }
    best.map(|(_, peaks)| BeatSeries::from_peaks(peaks, sample_rate_hz))
        .ok_or(HrvError::NoPlausiblePeaks)
}

pub fn detect_beats_in(window: &WindowedSegment) -> Result<BeatSeries, HrvError> {
    detect_beats(&window.samples, window.sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_signal_has_no_peaks() {
        assert_eq!(detect_beats(&vec![0.0; 7000], 700.0), Err(HrvError::NoPlausiblePeaks));
    }

    #[test]
    fn impulse_train_is_found() {
        let rate = 100.0;
        let mut x = vec![0.0; 1000];
        for k in 0..10 {
            x[50 + k * 80] = 1.0;
        }
        let beats = detect_beats(&x, rate).unwrap();
        assert_eq!(beats.peak_indices, (0..10).map(|k| 50 + k * 80).collect::<Vec<_>>());
        assert!(beats.rr_ms.iter().all(|&r| r == 800.0));
        assert_eq!(beats.accepted_count(), 9);
    }

    #[test]
    fn implausible_rr_is_masked() {
        let b = BeatSeries::from_peaks(vec![0, 100, 110, 300, 600], 100.0);
        assert_eq!(b.rr_ms, vec![1000.0, 100.0, 1900.0, 3000.0]);
        assert_eq!(b.accepted, vec![true, false, true, false]);
    }

    #[test]
    fn rolling_mean_edges_shrink() {
        let m = rolling_mean(&[1.0, 2.0, 3.0, 4.0], 3);
        assert_eq!(m, vec![1.5, 2.0, 3.0, 3.5]);
    }
}
