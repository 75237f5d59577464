//! Dataset loading, canonical serialization, dataset adapters and the
//! synthetic ground-truth generator.

mod adapters;
mod canonical;
mod synthetic;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::ValidationError;

pub use adapters::{adapt_case, adapt_wesad, CASE_SIGNAL_RATE_HZ, WESAD_ECG_RATE_HZ, WESAD_LABEL_RATE_HZ, WESAD_PPG_RATE_HZ};
pub use canonical::{
    load_dataset, read_annotations, read_signal, write_annotations, write_canonical, write_signal, Dataset,
    DatasetManifest, ManifestSubject, SubjectBundle, MANIFEST_FILE, RATE_TOLERANCE,
};
pub use synthetic::{
    generate_synthetic, truth_windows, GroundTruth, StateSpec, SyntheticRecording, SyntheticSpec, TruthWindow,
    PPG_PEAK_OFFSET_S, PULSE_TRANSIT_S,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: {message}")]
    Parse { file: PathBuf, line: u64, message: String },
    #[error("subject {subject}: rate mismatch: {detail}")]
    RateMismatch { subject: String, detail: String },
    #[error("{file}: {source}")]
    Validation { file: PathBuf, source: ValidationError },
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("unrecognized layout: {0}")]
    UnrecognizedLayout(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io { path: path.to_path_buf(), source }
    }
}

impl SyntheticRecording {
    pub fn into_bundle(self) -> SubjectBundle {
        SubjectBundle { ecg: self.ecg, ppg: self.ppg, annotations: self.annotations }
    }
}
