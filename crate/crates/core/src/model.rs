//! Shared domain types: sampled signals, annotation tracks, affect labels,
//! windowed segments and the seed contract used by every stochastic step.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Signal modality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Modality {
    Ecg,
    Ppg,
}

impl Modality {
    pub const ALL: [Modality; 2] = [Modality::Ecg, Modality::Ppg];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Ecg => "ECG",
            Modality::Ppg => "PPG",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = LabelParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ECG" => Ok(Modality::Ecg),
            "PPG" | "BVP" => Ok(Modality::Ppg),
            _ => Err(LabelParseError(s.to_string())),
        }
    }
}

/// A uniformly sampled waveform on a per-subject shared clock.
///
/// Sample `i` sits at `start_time_s + i / sample_rate_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    pub subject_id: String,
    pub modality: Modality,
    pub sample_rate_hz: f64,
    pub samples: Vec<f64>,
    pub start_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ValidationError {
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("signal has no samples")]
    EmptySignal,
    #[error("sample rate must be positive, got {0}")]
    NonPositiveRate(f64),
}

impl SignalRecord {
    pub fn new(
        subject_id: impl Into<String>,
        modality: Modality,
        sample_rate_hz: f64,
        samples: Vec<f64>,
    ) -> Self {
        Self {
            subject_id: subject_id.into(),
            modality,
            sample_rate_hz,
            samples,
            start_time_s: 0.0,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn time_of(&self, index: usize) -> f64 {
        self.start_time_s + index as f64 / self.sample_rate_hz
    }

    /// Returns the record unchanged when every invariant holds.
    pub fn validate(self) -> Result<Self, ValidationError> {
        if !(self.sample_rate_hz > 0.0) || !self.sample_rate_hz.is_finite() {
            return Err(ValidationError::NonPositiveRate(self.sample_rate_hz));
        }
        if self.samples.is_empty() {
            return Err(ValidationError::EmptySignal);
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(ValidationError::NonFiniteSample(i));
        }
        Ok(self)
    }
}

/// Free-function form of [`SignalRecord::validate`].
pub fn validate_record(record: SignalRecord) -> Result<SignalRecord, ValidationError> {
    record.validate()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelScheme {
    DiscreteState,
    ArousalValence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AnnotationValues {
    /// Integer protocol codes (0 transient, 1 baseline, 2 stress, 3 amusement,
    /// 4 meditation, 5..7 discarded).
    Discrete(Vec<i64>),
    /// `(arousal, valence)` pairs.
    ArousalValence(Vec<(f64, f64)>),
}

impl AnnotationValues {
    pub fn len(&self) -> usize {
        match self {
            AnnotationValues::Discrete(v) => v.len(),
            AnnotationValues::ArousalValence(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTrack {
    pub sample_rate_hz: f64,
    pub values: AnnotationValues,
    pub start_time_s: f64,
}

impl AnnotationTrack {
    pub fn scheme(&self) -> LabelScheme {
        match self.values {
            AnnotationValues::Discrete(_) => LabelScheme::DiscreteState,
            AnnotationValues::ArousalValence(_) => LabelScheme::ArousalValence,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.values.len() as f64 / self.sample_rate_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DiscreteState {
    Baseline,
    Stress,
    Amusement,
    Meditation,
}

impl DiscreteState {
    pub const ALL: [DiscreteState; 4] = [
        DiscreteState::Baseline,
        DiscreteState::Stress,
        DiscreteState::Amusement,
        DiscreteState::Meditation,
    ];

    pub fn code(self) -> i64 {
        match self {
            DiscreteState::Baseline => 1,
            DiscreteState::Stress => 2,
            DiscreteState::Amusement => 3,
            DiscreteState::Meditation => 4,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(DiscreteState::Baseline),
            2 => Some(DiscreteState::Stress),
            3 => Some(DiscreteState::Amusement),
            4 => Some(DiscreteState::Meditation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Low,
    High,
}

/// One resolved label per retained window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AffectLabel {
    State(DiscreteState),
    Quadrant { arousal: Level, valence: Level },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unrecognized label '{0}'")]
pub struct LabelParseError(pub String);

impl AffectLabel {
    pub fn name(&self) -> &'static str {
        match self {
            AffectLabel::State(DiscreteState::Baseline) => "baseline",
            AffectLabel::State(DiscreteState::Stress) => "stress",
            AffectLabel::State(DiscreteState::Amusement) => "amusement",
            AffectLabel::State(DiscreteState::Meditation) => "meditation",
            AffectLabel::Quadrant { arousal: Level::Low, valence: Level::Low } => "LALV",
            AffectLabel::Quadrant { arousal: Level::Low, valence: Level::High } => "LAHV",
            AffectLabel::Quadrant { arousal: Level::High, valence: Level::Low } => "HALV",
            AffectLabel::Quadrant { arousal: Level::High, valence: Level::High } => "HAHV",
        }
    }

    pub fn scheme(&self) -> LabelScheme {
        match self {
            AffectLabel::State(_) => LabelScheme::DiscreteState,
            AffectLabel::Quadrant { .. } => LabelScheme::ArousalValence,
        }
    }
}

impl fmt::Display for AffectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AffectLabel {
    type Err = LabelParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let label = match s.to_ascii_lowercase().as_str() {
            "baseline" | "neutral" => AffectLabel::State(DiscreteState::Baseline),
            "stress" => AffectLabel::State(DiscreteState::Stress),
            "amusement" => AffectLabel::State(DiscreteState::Amusement),
            "meditation" => AffectLabel::State(DiscreteState::Meditation),
            "lalv" => AffectLabel::Quadrant { arousal: Level::Low, valence: Level::Low },
            "lahv" => AffectLabel::Quadrant { arousal: Level::Low, valence: Level::High },
            "halv" => AffectLabel::Quadrant { arousal: Level::High, valence: Level::Low },
            "hahv" => AffectLabel::Quadrant { arousal: Level::High, valence: Level::High },
            _ => return Err(LabelParseError(s.to_string())),
        };
        Ok(label)
    }
}

impl Serialize for AffectLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for AffectLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One window of one signal with its resolved label.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSegment {
    pub window_id: usize,
    pub subject_id: String,
    pub modality: Modality,
    pub sample_rate_hz: f64,
    pub samples: Vec<f64>,
    pub label: AffectLabel,
    pub window_start_s: f64,
}

/// Seed for every stochastic operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Independent stream for sub-task `stream` (e.g. a tree index).
    pub fn derive(self, stream: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(stream.wrapping_add(0x9E37_79B9_7F4A_7C15))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
