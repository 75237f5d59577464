//! Canonical on-disk dataset: `manifest.json` plus one `index,value` CSV per
//! signal and an `index,label` or `index,arousal,valence` annotation CSV.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::{AnnotationTrack, AnnotationValues, LabelScheme, Modality, SignalRecord};

pub const MANIFEST_FILE: &str = "manifest.json";
/// Allowed relative disagreement between the durations implied by each
/// stream's sample count and declared rate.
pub const RATE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSubject {
    pub subject_id: String,
    pub ecg_file: String,
    pub ppg_file: String,
    pub annotation_file: String,
    pub ecg_rate_hz: f64,
    pub ppg_rate_hz: f64,
    pub annotation_rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset_name: String,
    pub label_scheme: LabelScheme,
    pub subjects: Vec<ManifestSubject>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<(), IngestError> {
        for s in &self.subjects {
            for (name, rate) in [("ecg_rate_hz", s.ecg_rate_hz), ("ppg_rate_hz", s.ppg_rate_hz), ("annotation_rate_hz", s.annotation_rate_hz)] {
                if !(rate > 0.0) || !rate.is_finite() {
                    return Err(IngestError::InvalidManifest(format!("{}: {name} must be positive", s.subject_id)));
                }
            }
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, IngestError> {
        if !path.exists() {
            return Err(IngestError::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
        let manifest: Self = serde_json::from_str(&text)
            .map_err(|e| IngestError::Parse { file: path.to_path_buf(), line: e.line() as u64, message: e.to_string() })?;
        manifest.validate()?;
        Ok(manifest)
    }
}

/// One subject's validated streams.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectBundle {
    pub ecg: SignalRecord,
    pub ppg: SignalRecord,
    pub annotations: AnnotationTrack,
}

impl SubjectBundle {
    pub fn subject_id(&self) -> &str {
        &self.ecg.subject_id
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub label_scheme: LabelScheme,
    pub subjects: Vec<SubjectBundle>,
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>, IngestError> {
    if !path.exists() {
        return Err(IngestError::MissingFile(path.to_path_buf()));
    }
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| IngestError::Parse { file: path.to_path_buf(), line: 0, message: e.to_string() })
}

/// Reads rows of `index,<columns...>`, checking the header and that indices
/// run 0, 1, 2, ...
fn read_rows(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>, IngestError> {
    let mut reader = open_reader(path)?;
    let parse_err = |line: u64, message: String| IngestError::Parse { file: path.to_path_buf(), line, message };
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let expected: Vec<&str> = std::iter::once("index").chain(columns.iter().copied()).collect();
    if header.iter().map(str::trim).collect::<Vec<_>>() != expected {
        return Err(parse_err(1, format!("expected header {}", expected.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() != expected.len() {
            return Err(parse_err(line, format!("expected {} fields, got {}", expected.len(), rec.len())));
        }
        let index: usize = rec[0].trim().parse().map_err(|_| parse_err(line, format!("bad index '{}'", &rec[0])))?;
        if index != i {
            return Err(parse_err(line, format!("index {index} out of sequence, expected {i}")));
        }
        let values = rec
            .iter()
            .skip(1)
            .map(|f| f.trim().parse::<f64>().map_err(|_| parse_err(line, format!("non-numeric value '{f}'"))))
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(values);
    }
    Ok(rows)
}

pub fn read_signal(path: &Path, subject_id: &str, modality: Modality, rate: f64) -> Result<SignalRecord, IngestError> {
    let samples = read_rows(path, &["value"])?.into_iter().map(|r| r[0]).collect();
    SignalRecord::new(subject_id, modality, rate, samples)
        .validate()
        .map_err(|e| IngestError::Validation { file: path.to_path_buf(), source: e })
}

pub fn read_annotations(path: &Path, scheme: LabelScheme, rate: f64) -> Result<AnnotationTrack, IngestError> {
    let values = match scheme {
        LabelScheme::DiscreteState => {
            let rows = read_rows(path, &["label"])?;
            let mut codes = Vec::with_capacity(rows.len());
            for (i, r) in rows.iter().enumerate() {
                if r[0].fract() != 0.0 {
                    return Err(IngestError::Parse { file: path.to_path_buf(), line: i as u64 + 2, message: format!("label {} is not an integer", r[0]) });
                }
                codes.push(r[0] as i64);
            }
            AnnotationValues::Discrete(codes)
        }
        LabelScheme::ArousalValence => AnnotationValues::ArousalValence(
            read_rows(path, &["arousal", "valence"])?.into_iter().map(|r| (r[0], r[1])).collect(),
        ),
    };
    if values.is_empty() {
        return Err(IngestError::Parse { file: path.to_path_buf(), line: 1, message: "no annotation rows".into() });
    }
    Ok(AnnotationTrack { sample_rate_hz: rate, values, start_time_s: 0.0 })
}

fn check_rates(bundle: &SubjectBundle) -> Result<(), IngestError> {
    let reference = bundle.ecg.duration_s();
    for (what, d) in [("PPG", bundle.ppg.duration_s()), ("annotation", bundle.annotations.duration_s())] {
        let rel = (d - reference).abs() / reference;
        if rel > RATE_TOLERANCE {
            return Err(IngestError::RateMismatch {
                subject: bundle.subject_id().to_string(),
                detail: format!("ECG spans {reference:.3} s but {what} spans {d:.3} s"),
            });
        }
    }
    Ok(())
}

/// Loads every subject listed in the manifest; file names resolve against
/// the manifest's directory.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset, IngestError> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let subjects = manifest
        .subjects
        .iter()
        .map(|s| {
            let bundle = SubjectBundle {
                ecg: read_signal(&base.join(&s.ecg_file), &s.subject_id, Modality::Ecg, s.ecg_rate_hz)?,
                ppg: read_signal(&base.join(&s.ppg_file), &s.subject_id, Modality::Ppg, s.ppg_rate_hz)?,
                annotations: read_annotations(&base.join(&s.annotation_file), manifest.label_scheme, s.annotation_rate_hz)?,
            };
            check_rates(&bundle)?;
            Ok(bundle)
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    Ok(Dataset { name: manifest.dataset_name, label_scheme: manifest.label_scheme, subjects })
}

fn create(path: &Path) -> Result<BufWriter<File>, IngestError> {
    File::create(path).map(BufWriter::new).map_err(|e| IngestError::io(path, e))
}

pub fn write_signal(path: &Path, samples: &[f64]) -> Result<(), IngestError> {
    let mut w = create(path)?;
    let io = |e| IngestError::io(path, e);
    writeln!(w, "index,value").map_err(io)?;
    for (i, v) in samples.iter().enumerate() {
        writeln!(w, "{i},{v}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_annotations(path: &Path, track: &AnnotationTrack) -> Result<(), IngestError> {
    let mut w = create(path)?;
    let io = |e| IngestError::io(path, e);
    match &track.values {
        AnnotationValues::Discrete(codes) => {
            writeln!(w, "index,label").map_err(io)?;
            for (i, c) in codes.iter().enumerate() {
                writeln!(w, "{i},{c}").map_err(io)?;
            }
        }
        AnnotationValues::ArousalValence(av) => {
            writeln!(w, "index,arousal,valence").map_err(io)?;
            for (i, (a, v)) in av.iter().enumerate() {
                writeln!(w, "{i},{a},{v}").map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

fn file_stem(subject_id: &str) -> String {
    subject_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes the dataset under `dir` and returns the manifest written to
/// `dir/manifest.json`.
pub fn write_canonical(dataset: &Dataset, dir: &Path) -> Result<DatasetManifest, IngestError> {
    fs::create_dir_all(dir).map_err(|e| IngestError::io(dir, e))?;
    let mut subjects = Vec::with_capacity(dataset.subjects.len());
    for b in &dataset.subjects {
        let stem = file_stem(b.subject_id());
        let entry = ManifestSubject {
            subject_id: b.subject_id().to_string(),
            ecg_file: format!("{stem}_ecg.csv"),
            ppg_file: format!("{stem}_ppg.csv"),
            annotation_file: format!("{stem}_labels.csv"),
            ecg_rate_hz: b.ecg.sample_rate_hz,
            ppg_rate_hz: b.ppg.sample_rate_hz,
            annotation_rate_hz: b.annotations.sample_rate_hz,
        };
        write_signal(&dir.join(&entry.ecg_file), &b.ecg.samples)?;
        write_signal(&dir.join(&entry.ppg_file), &b.ppg.samples)?;
        write_annotations(&dir.join(&entry.annotation_file), &b.annotations)?;
        subjects.push(entry);
    }
    let manifest = DatasetManifest { dataset_name: dataset.name.clone(), label_scheme: dataset.label_scheme, subjects };
    let path: PathBuf = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| IngestError::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Modality;

    fn bundle(id: &str, n: usize) -> SubjectBundle {
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 1e3 / 7.0).collect();
        SubjectBundle {
            ecg: SignalRecord::new(id, Modality::Ecg, 100.0, samples.clone()),
            ppg: SignalRecord::new(id, Modality::Ppg, 50.0, samples[..n / 2].to_vec()),
            annotations: AnnotationTrack {
                sample_rate_hz: 4.0,
                values: AnnotationValues::Discrete((0..n / 25).map(|i| (i % 5) as i64).collect()),
                start_time_s: 0.0,
            },
        }
    }

    #[test]
    fn write_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset {
            name: "demo".into(),
            label_scheme: LabelScheme::DiscreteState,
            subjects: vec![bundle("s1", 1000), bundle("s 2", 600)],
        };
        write_canonical(&ds, dir.path()).unwrap();
        let back = load_dataset(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn missing_file_reported() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset { name: "d".into(), label_scheme: LabelScheme::DiscreteState, subjects: vec![bundle("s1", 200)] };
        write_canonical(&ds, dir.path()).unwrap();
        fs::remove_file(dir.path().join("s1_ppg.csv")).unwrap();
        assert!(matches!(load_dataset(&dir.path().join(MANIFEST_FILE)), Err(IngestError::MissingFile(p)) if p.ends_with("s1_ppg.csv")));
    }

    #[test]
    fn non_numeric_value_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, "index,value\n0,1.5\n1,abc\n").unwrap();
        match read_signal(&path, "s", Modality::Ecg, 10.0) {
            Err(IngestError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rate_mismatch_detected() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = bundle("s1", 1000);
        b.ppg.sample_rate_hz = 45.0;
        let ds = Dataset { name: "d".into(), label_scheme: LabelScheme::DiscreteState, subjects: vec![b] };
        write_canonical(&ds, dir.path()).unwrap();
        assert!(matches!(load_dataset(&dir.path().join(MANIFEST_FILE)), Err(IngestError::RateMismatch { .. })));
    }
}
