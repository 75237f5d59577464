//! Beat detection and heart-rate-variability features.

mod beats;
mod breathing;
mod features;

use thiserror::Error;

pub use beats::{detect_beats, detect_beats_in, BeatSeries, BPM_RANGE, ELEVATION_FACTORS, RR_RANGE_MS};
pub use breathing::{estimate_breathing, welch_psd, BAND_HZ, NFFT, SEGMENT_S, TACHOGRAM_RATE_HZ};
pub use features::{
    compute_features, feature_index, rr_statistics, successive_differences, FeatureVector, FEATURE_COUNT,
    FEATURE_NAMES,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HrvError {
    #[error("no elevation factor yields a plausible heart rate")]
    NoPlausiblePeaks,
    #[error("need at least 4 accepted RR intervals, have {accepted}")]
    TooFewBeats { accepted: usize },
    #[error("RR series spans {span_s} s, breathing estimate needs 8 s")]
    InsufficientSpan { span_s: f64 },
}

/// Detects beats in a window and computes its features.
pub fn window_features(samples: &[f64], sample_rate_hz: f64) -> Result<FeatureVector, HrvError> {
    let beats = detect_beats(samples, sample_rate_hz)?;
    compute_features(&beats, sample_rate_hz)
}
