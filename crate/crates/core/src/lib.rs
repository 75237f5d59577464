//! Heart-rate-variability features from aligned ECG and PPG recordings,
//! inter-signal and inter-state feature variance, tree-ensemble affect
//! classification with one-versus-rest ROC analysis, and exact Shapley
//! feature importance.

pub mod dsp;
pub mod explain;
pub mod hrv;
pub mod ingest;
pub mod learn;
pub mod model;
pub mod pipeline;
pub mod table;
pub mod variance;
