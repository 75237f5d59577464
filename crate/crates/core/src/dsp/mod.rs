//! Band-pass filtering, sliding-window segmentation and annotation-to-window
//! label resolution.

mod filter;
mod label;
mod window;

use thiserror::Error;

pub use filter::{design_butterworth_bandpass, filter_signal, Biquad, FilterSpec, SosFilter};
pub use label::{resolve_label, resolve_label_av, resolve_label_discrete, LabelOutcome, AV_LOW_MAX, AV_RANGE};
pub use window::{segment_windows, window_starts, AlignedWindow, WindowSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("filter order must be positive")]
    InvalidOrder,
    #[error("invalid pass band [{low_hz}, {high_hz}] Hz")]
    InvalidBand { low_hz: f64, high_hz: f64 },
    #[error("cut-off {cutoff_hz} Hz is not below Nyquist {nyquist_hz} Hz")]
    CutoffAboveNyquist { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("invalid window spec: length {len_s} s, overlap {overlap_s} s")]
    InvalidWindowSpec { len_s: f64, overlap_s: f64 },
    #[error("recording too short for a complete window")]
    NoCompleteWindow,
    #[error("records are not aligned: {0}")]
    Misaligned(String),
    #[error("annotation value {value} outside [0.5, 9.5]")]
    ValueOutOfRange { value: f64 },
}
