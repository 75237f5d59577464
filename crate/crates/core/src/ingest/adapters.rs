//! Best-effort converters from published dataset exports into the canonical
//! layout.
//!
//! WESAD export, one directory per subject (`S2/`, `S3/`, ...):
//! - `ECG.csv`: chest ECG, one value per line, 700 Hz
//! - `BVP.csv`: wrist PPG in the Empatica E4 layout (start timestamp line,
//!   sample-rate line, then one value per line)
//! - `labels.csv`: protocol codes, one integer per line, 700 Hz
//!
//! CASE export (the dataset's `interpolated` tree): a `physiological/`
//! directory of `sub_<n>.csv` files with `daqtime`, `ecg` and `bvp` columns,
//! and an `annotations/` directory of `sub_<n>.csv` files with `jstime`,
//! `valence` and `arousal` columns. Timestamps are milliseconds.

use std::fs;
use std::path::{Path, PathBuf};

use super::canonical::{write_canonical, Dataset, DatasetManifest, SubjectBundle};
use super::IngestError;
use crate::dsp::AV_RANGE;
use crate::model::{AnnotationTrack, AnnotationValues, LabelScheme, Modality, SignalRecord};

pub const WESAD_ECG_RATE_HZ: f64 = 700.0;
pub const WESAD_PPG_RATE_HZ: f64 = 64.0;
pub const WESAD_LABEL_RATE_HZ: f64 = 700.0;
pub const CASE_SIGNAL_RATE_HZ: f64 = 1000.0;

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| IngestError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    Ok(entries)
}

fn parse_f64(path: &Path, line: usize, text: &str) -> Result<f64, IngestError> {
    text.trim().parse().map_err(|_| IngestError::Parse {
        file: path.to_path_buf(),
        line: line as u64,
        message: format!("non-numeric value '{}'", text.trim()),
    })
}

fn read_column(path: &Path, skip: usize) -> Result<Vec<f64>, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    text.lines()
        .enumerate()
        .skip(skip)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_f64(path, i + 1, l.split(',').next().unwrap_or("")))
        .collect()
}

/// E4 files: line 1 start timestamp, line 2 sample rate, then samples.
fn read_e4(path: &Path) -> Result<(f64, Vec<f64>), IngestError> {
    let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    let rate_line = text.lines().nth(1).ok_or_else(|| IngestError::UnrecognizedLayout(format!("{} lacks E4 header", path.display())))?;
    let rate = parse_f64(path, 2, rate_line.split(',').next().unwrap_or(""))?;
    Ok((rate, read_column(path, 2)?))
}

fn wesad_subject(dir: &Path) -> Result<SubjectBundle, IngestError> {
    let id = dir.file_name().and_then(|s| s.to_str()).unwrap_or("subject").to_string();
    let file = |name: &str| {
        let p = dir.join(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(IngestError::UnrecognizedLayout(format!("{} has no {name}", dir.display())))
        }
    };
    let ecg = read_column(&file("ECG.csv")?, 0)?;
    let (ppg_rate, ppg) = read_e4(&file("BVP.csv")?)?;
    let labels = read_column(&file("labels.csv")?, 0)?;
    let validate = |r: SignalRecord, p: PathBuf| r.validate().map_err(|e| IngestError::Validation { file: p, source: e });
    Ok(SubjectBundle {
        ecg: validate(SignalRecord::new(&id, Modality::Ecg, WESAD_ECG_RATE_HZ, ecg), dir.join("ECG.csv"))?,
        ppg: validate(SignalRecord::new(&id, Modality::Ppg, ppg_rate, ppg), dir.join("BVP.csv"))?,
        annotations: AnnotationTrack {
            sample_rate_hz: WESAD_LABEL_RATE_HZ,
            values: AnnotationValues::Discrete(labels.into_iter().map(|v| v.round() as i64).collect()),
            start_time_s: 0.0,
        },
    })
}

/// Converts a WESAD export under `raw` into canonical files under `out`.
pub fn adapt_wesad(raw: &Path, out: &Path) -> Result<DatasetManifest, IngestError> {
    let subjects = sorted_entries(raw)?
        .into_iter()
        .filter(|p| p.is_dir() && p.file_name().and_then(|s| s.to_str()).is_some_and(|s| s.starts_with('S')))
        .map(|p| wesad_subject(&p))
        .collect::<Result<Vec<_>, _>>()?;
    if subjects.is_empty() {
        return Err(IngestError::UnrecognizedLayout(format!("no S* subject directories in {}", raw.display())));
    }
    write_canonical(&Dataset { name: "WESAD".into(), label_scheme: LabelScheme::DiscreteState, subjects }, out)
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, IngestError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| IngestError::io(path, std::io::Error::other(e.to_string())))?;
        let header = reader
            .headers()
            .map_err(|e| IngestError::UnrecognizedLayout(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_ascii_lowercase())
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| IngestError::Parse { file: path.to_path_buf(), line: line as u64, message: e.to_string() })?;
            rows.push(rec.iter().map(|f| parse_f64(path, line, f)).collect::<Result<_, _>>()?);
        }
        Ok(Self { header, rows })
    }

    fn column(&self, path: &Path, name: &str) -> Result<Vec<f64>, IngestError> {
        let idx = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::UnrecognizedLayout(format!("{} has no '{name}' column", path.display())))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Sample rate implied by a millisecond timestamp column (median step).
fn rate_from_ms(times: &[f64]) -> Option<f64> {
    let mut steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).collect();
    if steps.is_empty() {
        return None;
    }
    steps.sort_by(f64::total_cmp);
    Some(1000.0 / steps[steps.len() / 2])
}

/// Per-subject min-max scaling of one axis onto [0.5, 9.5].
fn min_max_normalise(v: &[f64]) -> Vec<f64> {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (out_lo, out_hi) = AV_RANGE;
    if !(hi > lo) {
        return vec![0.5 * (out_lo + out_hi); v.len()];
    }
    v.iter().map(|x| out_lo + (x - lo) / (hi - lo) * (out_hi - out_lo)).collect()
}

fn find_dir(root: &Path, name: &str, depth: usize) -> Option<PathBuf> {
    let direct = root.join(name);
    if direct.is_dir() {
        return Some(direct);
    }
    if depth == 0 {
        return None;
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(root).ok()?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    subdirs.into_iter().find_map(|d| find_dir(&d, name, depth - 1))
}

fn case_subject(id: &str, physio: &Path, annot: &Path) -> Result<SubjectBundle, IngestError> {
    let p = Table::read(physio)?;
    let a = Table::read(annot)?;
    let signal_rate = rate_from_ms(&p.column(physio, "daqtime")?).map_or(CASE_SIGNAL_RATE_HZ, |r| (r * 1000.0).round() / 1000.0);
    let ann_times = a.column(annot, "jstime")?;
    let ann_rate = rate_from_ms(&ann_times)
        .ok_or_else(|| IngestError::UnrecognizedLayout(format!("{} has too few annotation rows", annot.display())))?;
    let arousal = min_max_normalise(&a.column(annot, "arousal")?);
    let valence = min_max_normalise(&a.column(annot, "valence")?);
    let validate = |r: SignalRecord| r.validate().map_err(|e| IngestError::Validation { file: physio.to_path_buf(), source: e });
    Ok(SubjectBundle {
        ecg: validate(SignalRecord::new(id, Modality::Ecg, signal_rate, p.column(physio, "ecg")?))?,
        ppg: validate(SignalRecord::new(id, Modality::Ppg, signal_rate, p.column(physio, "bvp")?))?,
        annotations: AnnotationTrack {
            sample_rate_hz: ann_rate,
            values: AnnotationValues::ArousalValence(arousal.into_iter().zip(valence).collect()),
            start_time_s: 0.0,
        },
    })
}

/// Converts a CASE export under `raw` into canonical files under `out`.
pub fn adapt_case(raw: &Path, out: &Path) -> Result<DatasetManifest, IngestError> {
    let (Some(physio_dir), Some(annot_dir)) = (find_dir(raw, "physiological", 3), find_dir(raw, "annotations", 3)) else {
        return Err(IngestError::UnrecognizedLayout(format!(
            "{} lacks physiological/ and annotations/ directories",
            raw.display()
        )));
    };
    let mut subjects = Vec::new();
    for physio in sorted_entries(&physio_dir)? {
        let Some(name) = physio.file_name().and_then(|s| s.to_str()) else { continue };
        if !name.ends_with(".csv") {
            continue;
        }
        let annot = annot_dir.join(name);
        if !annot.exists() {
            return Err(IngestError::MissingFile(annot));
        }
        subjects.push(case_subject(name.trim_end_matches(".csv"), &physio, &annot)?);
    }
    if subjects.is_empty() {
        return Err(IngestError::UnrecognizedLayout(format!("no subject files in {}", physio_dir.display())));
    }
    write_canonical(&Dataset { name: "CASE".into(), label_scheme: LabelScheme::ArousalValence, subjects }, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::canonical::{load_dataset, MANIFEST_FILE};

    fn lines(values: impl Iterator<Item = String>) -> String {
        values.collect::<Vec<_>>().join("\n") + "\n"
    }

    #[test]
    fn wesad_export_declares_table_rates() {
        let raw = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let s = raw.path().join("S2");
        fs::create_dir(&s).unwrap();
        fs::write(s.join("ECG.csv"), lines((0..7000).map(|i| format!("{}", (i as f64 * 0.01).sin())))).unwrap();
        let mut bvp = String::from("1495437325.000000\n64.000000\n");
        bvp += &lines((0..640).map(|i| format!("{}", (i as f64 * 0.1).cos())));
        fs::write(s.join("BVP.csv"), bvp).unwrap();
        fs::write(s.join("labels.csv"), lines((0..7000).map(|i| format!("{}", i / 2000)))).unwrap();

        let m = adapt_wesad(raw.path(), out.path()).unwrap();
        assert_eq!(m.subjects[0].ecg_rate_hz, 700.0);
        assert_eq!(m.subjects[0].ppg_rate_hz, 64.0);
        let ds = load_dataset(&out.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(ds.subjects[0].ppg.samples.len(), 640);
    }

    #[test]
    fn wesad_missing_file_is_unrecognized() {
        let raw = tempfile::tempdir().unwrap();
        fs::create_dir(raw.path().join("S3")).unwrap();
        let out = tempfile::tempdir().unwrap();
        assert!(matches!(adapt_wesad(raw.path(), out.path()), Err(IngestError::UnrecognizedLayout(_))));
    }

    #[test]
    fn case_export_uses_equal_rates_and_normalises() {
        let raw = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let phys = raw.path().join("interpolated/physiological");
        let ann = raw.path().join("interpolated/annotations");
        fs::create_dir_all(&phys).unwrap();
        fs::create_dir_all(&ann).unwrap();
        let mut p = String::from("daqtime,ecg,bvp,gsr\n");
        for i in 0..10_000 {
            p += &format!("{},{},{},0.1\n", i, (i as f64 * 0.01).sin(), (i as f64 * 0.002).cos());
        }
        fs::write(phys.join("sub_1.csv"), p).unwrap();
        let mut a = String::from("jstime,valence,arousal\n");
        for i in 0..200 {
            a += &format!("{},{},{}\n", i * 50, 1.0 + (i % 10) as f64, 3.0);
        }
        fs::write(ann.join("sub_1.csv"), a).unwrap();

        let m = adapt_case(raw.path(), out.path()).unwrap();
        assert_eq!(m.subjects[0].ecg_rate_hz, 1000.0);
        assert_eq!(m.subjects[0].ppg_rate_hz, m.subjects[0].ecg_rate_hz);
        assert_eq!(m.subjects[0].annotation_rate_hz, 20.0);
        let ds = load_dataset(&out.path().join(MANIFEST_FILE)).unwrap();
        let AnnotationValues::ArousalValence(av) = &ds.subjects[0].annotations.values else { panic!() };
        assert!(av.iter().all(|&(a, v)| (0.5..=9.5).contains(&a) && (0.5..=9.5).contains(&v)));
        assert_eq!(av.iter().map(|p| p.1).fold(f64::INFINITY, f64::min), 0.5);
        assert_eq!(av.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max), 9.5);
    }

    #[test]
    fn case_without_layout_is_unrecognized() {
        let raw = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        assert!(matches!(adapt_case(raw.path(), out.path()), Err(IngestError::UnrecognizedLayout(_))));
    }
}
