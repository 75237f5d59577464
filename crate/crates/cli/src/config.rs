//! Run configuration, flag overrides and the configuration hash.

use std::path::{Path, PathBuf};

use clap::Args;
use hrv_affect::dsp::{FilterSpec, WindowSpec};
use hrv_affect::explain::{DEFAULT_BACKGROUND, DEFAULT_MAX_ROWS};
use hrv_affect::learn::{ExtraTreesParams, ModelFamily};
use hrv_affect::model::RngSeed;
use hrv_affect::pipeline::ExtractConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnConfig {
    pub n_trees: usize,
    pub k_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub knn_k: usize,
    /// Families compared by cross-validation: `extra_trees`, `knn`, `gaussian_nb`.
    pub families: Vec<String>,
    /// Hold out and fold by subject instead of by window.
    pub subject_wise: bool,
}

impl Default for LearnConfig {
    fn default() -> Self {
        let p = ExtraTreesParams::default();
        Self {
            n_trees: p.n_trees,
            k_features: p.k_features,
            min_samples_leaf: p.min_samples_leaf,
            knn_k: 5,
            families: ModelFamily::standard().iter().map(|f| f.name().to_string()).collect(),
            subject_wise: false,
        }
    }
}

impl LearnConfig {
    pub fn tree_params(&self) -> ExtraTreesParams {
        ExtraTreesParams { n_trees: self.n_trees, k_features: self.k_features, min_samples_leaf: self.min_samples_leaf }
    }

    pub fn model_families(&self) -> Result<Vec<ModelFamily>, CliError> {
        self.families
            .iter()
            .map(|f| match f.as_str() {
                "extra_trees" => Ok(ModelFamily::ExtraTrees(self.tree_params())),
                "knn" => Ok(ModelFamily::Knn { k: self.knn_k }),
                "gaussian_nb" => Ok(ModelFamily::GaussianNb),
                other => Err(CliError::ConfigInvalid(format!("learn.families: unknown family '{other}'"))),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    /// Background rows drawn from the training partition.
    pub background_size: usize,
    /// Hold-out rows explained, at most.
    pub max_rows: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self { background_size: DEFAULT_BACKGROUND, max_rows: DEFAULT_MAX_ROWS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Canonical dataset manifest.
    pub manifest: Option<PathBuf>,
    /// Synthetic spec generated in memory when no manifest is given.
    pub synthetic_spec: Option<PathBuf>,
    pub window: WindowSpec,
    pub ecg_filter: FilterSpec,
    pub ppg_filter: FilterSpec,
    pub learn: LearnConfig,
    pub explain: ExplainConfig,
    pub seed: RngSeed,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            synthetic_spec: None,
            window: WindowSpec::default(),
            ecg_filter: FilterSpec::ecg_default(),
            ppg_filter: FilterSpec::ppg_default(),
            learn: LearnConfig::default(),
            explain: ExplainConfig::default(),
            seed: RngSeed(42),
        }
    }
}

/// Flags shared by the pipeline stages; each overrides the config file.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for this run.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for every stochastic step.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace outputs written under a different configuration.
    #[arg(long)]
    pub force: bool,
    /// Canonical dataset: a manifest.json or the directory holding it.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Synthetic spec generated in memory instead of a manifest.
    #[arg(long)]
    pub synthetic_spec: Option<PathBuf>,
    /// Window length in seconds.
    #[arg(long)]
    pub window_len: Option<f64>,
    /// Overlap between consecutive windows in seconds.
    #[arg(long)]
    pub overlap: Option<f64>,
    /// Trees per ensemble.
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Split hold-out and folds by subject.
    #[arg(long)]
    pub subject_wise: bool,
    /// Background rows for Shapley values.
    #[arg(long)]
    pub background_size: Option<usize>,
    /// Hold-out rows explained, at most.
    #[arg(long)]
    pub max_rows: Option<usize>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::ConfigInvalid(format!("{}: {e}", path.display())))
    }

    /// Base configuration from `--config`, else the one already recorded in
    /// the output directory, else defaults; flags are applied on top.
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let recorded = args.out.join(crate::output::CONFIG_FILE);
        let mut cfg = match &args.config {
            Some(p) => Self::load(p)?,
            None if recorded.is_file() => Self::load(&recorded)?,
            None => Self::default(),
        };
        if let Some(s) = args.seed {
            cfg.seed = RngSeed(s);
        }
        if let Some(p) = &args.manifest {
            cfg.manifest = Some(p.clone());
        }
        if let Some(p) = &args.synthetic_spec {
            cfg.synthetic_spec = Some(p.clone());
        }
        if let Some(v) = args.window_len {
            cfg.window.window_len_s = v;
        }
        if let Some(v) = args.overlap {
            cfg.window.overlap_s = v;
        }
        if let Some(v) = args.n_trees {
            cfg.learn.n_trees = v;
        }
        if args.subject_wise {
            cfg.learn.subject_wise = true;
        }
        if let Some(v) = args.background_size {
            cfg.explain.background_size = v;
        }
        if let Some(v) = args.max_rows {
            cfg.explain.max_rows = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str| Err(CliError::ConfigInvalid(field.to_string()));
        if self.window.validate().is_err() {
            return bad("window");
        }
        if self.learn.n_trees == 0 {
            return bad("learn.n_trees");
        }
        if self.learn.min_samples_leaf == 0 {
            return bad("learn.min_samples_leaf");
        }
        if self.learn.knn_k == 0 {
            return bad("learn.knn_k");
        }
        if self.learn.families.is_empty() {
            return bad("learn.families");
        }
        self.learn.model_families()?;
        if self.explain.background_size == 0 {
            return bad("explain.background_size");
        }
        if self.explain.max_rows == 0 {
            return bad("explain.max_rows");
        }
        Ok(())
    }

    pub fn extract_config(&self) -> ExtractConfig {
        ExtractConfig { window: self.window, ecg_filter: self.ecg_filter, ppg_filter: self.ppg_filter }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the pretty JSON form, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
