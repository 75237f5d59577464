//! Synthetic ECG/PPG recordings with exactly known beat times.
//!
//! Beats follow `RR_n = 60000 / bpm + jitter_n + A * sin(2 pi f_resp t)`,
//! where `t` is the time of the preceding beat. ECG uses a P-QRS-T template
//! centred on each beat; PPG uses a raised-cosine pulse whose foot lags the
//! beat by a fixed transit delay.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::dsp::{window_starts, WindowSpec};
use crate::hrv::{estimate_breathing, rr_statistics, successive_differences, FeatureVector};
use crate::model::{
    AffectLabel, AnnotationTrack, AnnotationValues, LabelScheme, Level, Modality, RngSeed, SignalRecord,
};

pub const PULSE_TRANSIT_S: f64 = 0.25;
pub const PPG_RISE_S: f64 = 0.15;
pub const PPG_DECAY_S: f64 = 0.35;
/// Offset from beat time to the PPG pulse maximum.
pub const PPG_PEAK_OFFSET_S: f64 = PULSE_TRANSIT_S + PPG_RISE_S;
const FIRST_BEAT_S: f64 = 0.3;

/// (offset s, amplitude, sigma s) of the Gaussian ECG components.
const ECG_TEMPLATE: [(f64, f64, f64); 5] = [
    (-0.200, 0.12, 0.025),
    (-0.035, -0.12, 0.010),
    (0.000, 1.00, 0.010),
    (0.035, -0.20, 0.010),
    (0.250, 0.30, 0.040),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub label: AffectLabel,
    pub mean_bpm: f64,
    pub bpm_jitter_ms: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(default = "default_subject")]
    pub subject_id: String,
    pub duration_s: f64,
    pub ecg_rate_hz: f64,
    pub ppg_rate_hz: f64,
    pub states: Vec<StateSpec>,
    pub respiratory_rate_hz: f64,
    pub respiratory_rr_modulation_ms: f64,
    pub noise_std: f64,
    /// Overrides `noise_std` for the PPG channel only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ppg_noise_std: Option<f64>,
    /// Defaults to the ECG rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation_rate_hz: Option<f64>,
    pub seed: RngSeed,
}

fn default_subject() -> String {
    "synthetic".to_string()
}

impl SyntheticSpec {
    /// Single-state spec with no jitter, modulation or noise.
    pub fn steady(mean_bpm: f64, duration_s: f64, ecg_rate_hz: f64, ppg_rate_hz: f64) -> Self {
        Self {
            subject_id: default_subject(),
            duration_s,
            ecg_rate_hz,
            ppg_rate_hz,
            states: vec![StateSpec {
                label: AffectLabel::State(crate::model::DiscreteState::Baseline),
                mean_bpm,
                bpm_jitter_ms: 0.0,
                duration_s,
            }],
            respiratory_rate_hz: 0.25,
            respiratory_rr_modulation_ms: 0.0,
            noise_std: 0.0,
            ppg_noise_std: None,
            annotation_rate_hz: None,
            seed: RngSeed(0),
        }
    }

    pub fn scheme(&self) -> LabelScheme {
        self.states.first().map_or(LabelScheme::DiscreteState, |s| s.label.scheme())
    }

    pub fn annotation_rate(&self) -> f64 {
        self.annotation_rate_hz.unwrap_or(self.ecg_rate_hz)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |msg: String| Err(IngestError::InvalidSpec(msg));
        if !(self.duration_s > 0.0) {
            return bad(format!("duration_s must be positive, got {}", self.duration_s));
        }
        for (name, rate) in [("ecg_rate_hz", self.ecg_rate_hz), ("ppg_rate_hz", self.ppg_rate_hz), ("annotation_rate_hz", self.annotation_rate())] {
            if !(rate > 0.0) || !rate.is_finite() {
                return bad(format!("{name} must be positive, got {rate}"));
            }
        }
        if !(0.1..=0.4).contains(&self.respiratory_rate_hz) {
            return bad(format!("respiratory_rate_hz {} outside [0.1, 0.4]", self.respiratory_rate_hz));
        }
        if !(self.respiratory_rr_modulation_ms >= 0.0) {
            return bad("respiratory_rr_modulation_ms must be >= 0".into());
        }
        if !(self.noise_std >= 0.0) || !(self.ppg_noise_std.unwrap_or(0.0) >= 0.0) {
            return bad("noise_std must be >= 0".into());
        }
        if self.states.is_empty() {
            return bad("at least one state is required".into());
        }
        let scheme = self.scheme();
        for s in &self.states {
            if !(30.0..=220.0).contains(&s.mean_bpm) {
                return bad(format!("mean_bpm {} outside [30, 220]", s.mean_bpm));
            }
            if !(s.bpm_jitter_ms >= 0.0) || !(s.duration_s > 0.0) {
                return bad("state jitter must be >= 0 and duration positive".into());
            }
            if s.label.scheme() != scheme {
                return bad("states mix discrete and arousal/valence labels".into());
            }
        }
        let total: f64 = self.states.iter().map(|s| s.duration_s).sum();
        if (total - self.duration_s).abs() > 1e-6 * self.duration_s.max(1.0) {
            return bad(format!("state durations sum to {total}, expected {}", self.duration_s));
        }
        Ok(())
    }

    fn state_at(&self, t: f64) -> &StateSpec {
        let mut end = 0.0;
        for s in &self.states {
            end += s.duration_s;
            if t < end {
                return s;
            }
        }
        self.states.last().expect("validated non-empty")
    }
}

/// Per-window features computed from the exact beat times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthWindow {
    pub window_id: usize,
    pub window_start_s: f64,
    pub label: AffectLabel,
    pub features: Option<FeatureVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Beat times, seconds.
    pub beat_times_s: Vec<f64>,
    /// `rr_ms[i]` is the interval ending at `beat_times_s[i + 1]`.
    pub rr_ms: Vec<f64>,
    pub ppg_peak_offset_s: f64,
    pub windows: Vec<TruthWindow>,
}

impl GroundTruth {
    /// Beat times in `[start, end)`, shifted by `offset_s` (PPG peaks use
    /// [`PPG_PEAK_OFFSET_S`]).
    pub fn beats_between(&self, start: f64, end: f64, offset_s: f64) -> Vec<f64> {
        self.beat_times_s
            .iter()
            .map(|t| t + offset_s)
            .filter(|t| (start..end).contains(t))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRecording {
    pub ecg: SignalRecord,
    pub ppg: SignalRecord,
    pub annotations: AnnotationTrack,
    pub truth: GroundTruth,
}

fn beat_times(spec: &SyntheticSpec) -> (Vec<f64>, Vec<f64>) {
    let mut rng = spec.seed.derive(0).rng();
    let mut times = vec![FIRST_BEAT_S];
    let mut rr = Vec::new();
    loop {
        let prev = *times.last().unwrap();
        let state = spec.state_at(prev);
        let z: f64 = rng.sample(StandardNormal);
        let interval = 60_000.0 / state.mean_bpm
            + state.bpm_jitter_ms * z
            + spec.respiratory_rr_modulation_ms * (2.0 * PI * spec.respiratory_rate_hz * prev).sin();
        let next = prev + interval / 1000.0;
        if next >= spec.duration_s {
            break;
        }
        times.push(next);
        rr.push(interval);
    }
    (times, rr)
}

fn ecg_waveform(beats: &[f64], rate: f64, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for &t in beats {
        let lo = (((t - 0.35) * rate).floor().max(0.0)) as usize;
        let hi = (((t + 0.45) * rate).ceil() as usize).min(n);
        for (i, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
            let dt = i as f64 / rate - t;
            *v += ECG_TEMPLATE
                .iter()
                .map(|&(off, amp, sigma)| amp * (-0.5 * ((dt - off) / sigma).powi(2)).exp())
                .sum::<f64>();
        }
    }
    x
}

fn ppg_pulse(dt: f64) -> f64 {
    if dt < 0.0 || dt > PPG_RISE_S + PPG_DECAY_S {
        0.0
    } else if dt <= PPG_RISE_S {
        0.5 - 0.5 * (PI * dt / PPG_RISE_S).cos()
    } else {
        0.5 + 0.5 * (PI * (dt - PPG_RISE_S) / PPG_DECAY_S).cos()
    }
}

fn ppg_waveform(beats: &[f64], rate: f64, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for &t in beats {
        let onset = t + PULSE_TRANSIT_S;
        let lo = ((onset * rate).floor().max(0.0)) as usize;
        let hi = (((onset + PPG_RISE_S + PPG_DECAY_S) * rate).ceil() as usize + 1).min(n);
        for (i, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
            *v += ppg_pulse(i as f64 / rate - onset);
        }
    }
    x
}

fn add_noise(x: &mut [f64], std: f64, seed: RngSeed) {
    if std == 0.0 {
        return;
    }
    let mut rng = seed.rng();
    for v in x {
        let z: f64 = rng.sample(StandardNormal);
        *v += std * z;
    }
}

fn av_level_value(level: Level) -> f64 {
    match level {
        Level::Low => 2.75,
        Level::High => 7.25,
    }
}

fn annotation_track(spec: &SyntheticSpec) -> AnnotationTrack {
    let rate = spec.annotation_rate();
    let n = (spec.duration_s * rate).round() as usize;
    let labels = (0..n).map(|i| spec.state_at(i as f64 / rate).label);
    let values = match spec.scheme() {
        LabelScheme::DiscreteState => AnnotationValues::Discrete(
            labels
                .map(|l| match l {
                    AffectLabel::State(s) => s.code(),
                    AffectLabel::Quadrant { .. } => unreachable!("validated single scheme"),
                })
                .collect(),
        ),
        LabelScheme::ArousalValence => AnnotationValues::ArousalValence(
            labels
                .map(|l| match l {
                    AffectLabel::Quadrant { arousal, valence } => (av_level_value(arousal), av_level_value(valence)),
                    AffectLabel::State(_) => unreachable!("validated single scheme"),
                })
                .collect(),
        ),
    };
    AnnotationTrack { sample_rate_hz: rate, values, start_time_s: 0.0 }
}

/// Features of the exact beats inside each window of `wspec`.
///
/// Windows whose span crosses a state boundary take the state covering the
/// larger part of the window.
pub fn truth_windows(spec: &SyntheticSpec, beats: &[f64], rr: &[f64], wspec: &WindowSpec) -> Vec<TruthWindow> {
    window_starts(spec.duration_s, wspec)
        .into_iter()
        .enumerate()
        .map(|(window_id, start)| {
            let end = start + wspec.window_len_s;
            let inside: Vec<usize> = (1..beats.len())
                .filter(|&i| beats[i - 1] >= start && beats[i] < end)
                .collect();
            let rr_w: Vec<f64> = inside.iter().map(|&i| rr[i - 1]).collect();
            let features = (rr_w.len() >= 4).then(|| {
                let times: Vec<f64> = inside.iter().map(|&i| beats[i] - beats[inside[0] - 1]).collect();
                let br = estimate_breathing(&rr_w, &times).ok().flatten();
                rr_statistics(&rr_w, &successive_differences(&rr_w), br)
            });
            TruthWindow {
                window_id,
                window_start_s: start,
                label: spec.state_at(start + wspec.window_len_s / 2.0).label,
                features,
            }
        })
        .collect()
}

/// Generates one subject's aligned ECG, PPG and annotations plus ground truth
/// for the default window layout.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticRecording, IngestError> {
    spec.validate()?;
    let (beats, rr) = beat_times(spec);
    let n_ecg = (spec.duration_s * spec.ecg_rate_hz).round() as usize;
    let n_ppg = (spec.duration_s * spec.ppg_rate_hz).round() as usize;

    let mut ecg = ecg_waveform(&beats, spec.ecg_rate_hz, n_ecg);
    add_noise(&mut ecg, spec.noise_std, spec.seed.derive(1));
    let mut ppg = ppg_waveform(&beats, spec.ppg_rate_hz, n_ppg);
    add_noise(&mut ppg, spec.ppg_noise_std.unwrap_or(spec.noise_std), spec.seed.derive(2));

    let windows = truth_windows(spec, &beats, &rr, &WindowSpec::default());
    Ok(SyntheticRecording {
        ecg: SignalRecord::new(spec.subject_id.clone(), Modality::Ecg, spec.ecg_rate_hz, ecg),
        ppg: SignalRecord::new(spec.subject_id.clone(), Modality::Ppg, spec.ppg_rate_hz, ppg),
        annotations: annotation_track(spec),
        truth: GroundTruth { beat_times_s: beats, rr_ms: rr, ppg_peak_offset_s: PPG_PEAK_OFFSET_S, windows },
    })
}
