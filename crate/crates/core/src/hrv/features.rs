//! The thirteen time-domain, Poincaré and respiratory features of one window.
//!
//! All standard deviations are population statistics; SD1/SD2 come from the
//! RMSSD/SDNN identities.

use serde::{Deserialize, Serialize};

use super::beats::BeatSeries;
use super::breathing::estimate_breathing;
use super::HrvError;

pub const FEATURE_COUNT: usize = 13;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "bpm", "ibi", "sdnn", "sdsd", "rmssd", "pnn20", "pnn50", "mad", "br", "sd1", "sd2", "s", "sd1_sd2",
];

/// Index of a feature in [`FEATURE_NAMES`] order.
pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub bpm: f64,
    pub ibi: f64,
    pub sdnn: f64,
    pub sdsd: f64,
    pub rmssd: f64,
    pub pnn20: f64,
    pub pnn50: f64,
    pub mad: f64,
    /// Hz; `None` when no respiratory peak could be estimated.
    pub br: Option<f64>,
    pub sd1: f64,
    pub sd2: f64,
    pub s: f64,
    /// `None` when `sd2 == 0`.
    pub sd1_sd2: Option<f64>,
}

impl FeatureVector {
    pub fn values(&self) -> [Option<f64>; FEATURE_COUNT] {
        [
            Some(self.bpm),
            Some(self.ibi),
            Some(self.sdnn),
            Some(self.sdsd),
            Some(self.rmssd),
            Some(self.pnn20),
            Some(self.pnn50),
            Some(self.mad),
            self.br,
            Some(self.sd1),
            Some(self.sd2),
            Some(self.s),
            self.sd1_sd2,
        ]
    }

    /// Inverse of [`values`](Self::values); `None` when a mandatory feature is missing.
    pub fn from_values(v: &[Option<f64>; FEATURE_COUNT]) -> Option<Self> {
        Some(Self {
            bpm: v[0]?,
            ibi: v[1]?,
            sdnn: v[2]?,
            sdsd: v[3]?,
            rmssd: v[4]?,
            pnn20: v[5]?,
            pnn50: v[6]?,
            mad: v[7]?,
            br: v[8],
            sd1: v[9]?,
            sd2: v[10]?,
            s: v[11]?,
            sd1_sd2: v[12],
        })
    }

    /// True when any optional feature is missing.
    pub fn has_missing(&self) -> bool {
        self.br.is_none() || self.sd1_sd2.is_none()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pop_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Everything except the breathing rate, from accepted RR intervals `rr`
/// and their successive differences `diffs`.
pub fn rr_statistics(rr: &[f64], diffs: &[f64], br: Option<f64>) -> FeatureVector {
    let ibi = mean(rr);
    let sdnn = pop_std(rr);
    let sdsd = pop_std(diffs);
    let rmssd = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    let frac_above = |limit: f64| diffs.iter().filter(|d| d.abs() > limit).count() as f64 / diffs.len() as f64;
    let med = median(rr);
    let abs_dev: Vec<f64> = rr.iter().map(|r| (r - med).abs()).collect();
    let sd1 = (0.5 * rmssd * rmssd).max(0.0).sqrt();
    let sd2 = (2.0 * sdnn * sdnn - 0.5 * rmssd * rmssd).max(0.0).sqrt();
    FeatureVector {
        bpm: 60_000.0 / ibi,
        ibi,
        sdnn,
        sdsd,
        rmssd,
        pnn20: frac_above(20.0),
        pnn50: frac_above(50.0),
        mad: median(&abs_dev),
        br,
        sd1,
        sd2,
        s: std::f64::consts::PI * sd1 * sd2,
        sd1_sd2: (sd2 > 0.0).then(|| sd1 / sd2),
    }
}

/// Successive differences over a contiguous, fully accepted RR sequence.
pub fn successive_differences(rr: &[f64]) -> Vec<f64> {
    rr.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Computes the feature vector of one beat series.
///
/// Only accepted intervals contribute; successive differences are taken
/// between adjacent intervals that are both accepted. A failed breathing
/// estimate leaves `br` missing rather than failing the window.
pub fn compute_features(beats: &BeatSeries, sample_rate_hz: f64) -> Result<FeatureVector, HrvError> {
    let accepted = beats.accepted_count();
    if accepted < 4 {
        return Err(HrvError::TooFewBeats { accepted });
    }
    let mut rr = Vec::with_capacity(accepted);
    let mut times = Vec::with_capacity(accepted);
    let origin = beats.peak_indices[0];
    for (i, (&r, &ok)) in beats.rr_ms.iter().zip(&beats.accepted).enumerate() {
        if ok {
            rr.push(r);
            times.push((beats.peak_indices[i + 1] - origin) as f64 / sample_rate_hz);
        }
    }
    let diffs: Vec<f64> = beats
        .rr_ms
        .windows(2)
        .zip(beats.accepted.windows(2))
        .filter(|(_, ok)| ok[0] && ok[1])
        .map(|(r, _)| r[1] - r[0])
        .collect();
    if diffs.is_empty() {
        return Err(HrvError::TooFewBeats { accepted });
    }
    let br = estimate_breathing(&rr, &times).ok().flatten();
    Ok(rr_statistics(&rr, &diffs, br))
}
