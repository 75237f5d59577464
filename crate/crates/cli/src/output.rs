//! Run directories, fixed-precision number formatting and file writers.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::PipelineConfig;
use crate::error::CliError;

pub const CONFIG_FILE: &str = "config.json";
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().expect("formatted float parses")
}

/// Shortest decimal form of the rounded value; empty for `None`.
pub fn fmt_num(v: f64) -> String {
    let r = round_sig(v);
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                let r = round_sig(n.as_f64().expect("f64 number"));
                *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to the fixed precision.
pub fn to_rounded_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("output serializes");
    round_value(&mut v);
    serde_json::to_string_pretty(&v).expect("value serializes") + "\n"
}

/// An output directory bound to one configuration hash.
pub struct RunDir {
    pub path: PathBuf,
    pub hash: String,
}

impl RunDir {
    /// Creates or reopens `path` for `cfg`. A directory written under a
    /// different configuration is only taken over with `force`, which
    /// clears its previous outputs.
    pub fn open(path: &Path, cfg: &PipelineConfig, force: bool) -> Result<Self, CliError> {
        let hash = cfg.hash();
        let config_path = path.join(CONFIG_FILE);
        if config_path.exists() {
            let existing = fs::read_to_string(&config_path).map_err(|e| CliError::io(&config_path, e))?;
            let previous: PipelineConfig = serde_json::from_str(&existing).map_err(|e| CliError::format(&config_path, e))?;
            let previous_hash = previous.hash();
            if previous_hash != hash {
                if !force {
                    return Err(CliError::ConfigConflict { dir: path.to_path_buf(), existing: previous_hash });
                }
                for entry in fs::read_dir(path).map_err(|e| CliError::io(path, e))? {
                    let p = entry.map_err(|e| CliError::io(path, e))?.path();
                    if p.is_file() {
                        fs::remove_file(&p).map_err(|e| CliError::io(&p, e))?;
                    }
                }
            }
        }
        fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
        fs::write(&config_path, cfg.to_json() + "\n").map_err(|e| CliError::io(&config_path, e))?;
        Ok(Self { path: path.to_path_buf(), hash })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    /// Path of a prior stage's output, or `MissingInput`.
    pub fn input(&self, name: &str) -> Result<PathBuf, CliError> {
        let p = self.file(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::MissingInput(name.to_string()))
        }
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let p = self.file(name);
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    /// CSV with a leading `# config_hash=...` comment line.
    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for r in rows {
            w.write_record(r).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv");
        self.write_text(name, &format!("# config_hash={}\n{body}", self.hash))
    }

    /// JSON object with `config_hash` as its first field.
    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        #[derive(Serialize)]
        struct Stamped<'a, T: Serialize> {
            config_hash: &'a str,
            #[serde(flatten)]
            body: &'a T,
        }
        self.write_text(name, &to_rounded_json(&Stamped { config_hash: &self.hash, body: value }))
    }

    pub fn write_svg(&self, name: &str, svg: &str) -> Result<PathBuf, CliError> {
        let stamped = svg.replacen('>', &format!(">\n<!-- config_hash={} -->", self.hash), 1);
        self.write_text(name, &stamped)
    }
}

/// Reads a CSV written by [`RunDir::write_csv`], skipping the comment line.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>), CliError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(|e| CliError::format(path, e))?;
    let header = r.headers().map_err(|e| CliError::format(path, e))?.iter().map(str::to_string).collect();
    let rows = r.records().collect::<Result<Vec<_>, _>>().map_err(|e| CliError::format(path, e))?;
    Ok((header, rows))
}
