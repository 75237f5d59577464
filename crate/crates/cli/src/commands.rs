//! One function per subcommand.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use hrv_affect::explain::{global_importance, sample_rows, ImportanceReport};
use hrv_affect::hrv::{FEATURE_COUNT, FEATURE_NAMES};
use hrv_affect::ingest::{
    adapt_case, adapt_wesad, generate_synthetic, load_dataset, write_canonical, Dataset, GroundTruth, SyntheticSpec,
    MANIFEST_FILE,
};
use hrv_affect::learn::{evaluate, train_extra_trees, FamilyCv, FittedModel, SplitStrategy, TreeEnsembleModel};
use hrv_affect::model::{Modality, RngSeed};
use hrv_affect::pipeline::extract_dataset;
use hrv_affect::table::{FeatureRow, LabeledMatrix};
use hrv_affect::variance::{inter_signal_variance, state_feature_stats};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::output::{fmt_num, fmt_opt, read_csv, RunDir};
use crate::svg::{self, BoxStats};

pub const FEATURES_FILE: &str = "features.csv";
pub const VARIANCE_FILE: &str = "variance.csv";
pub const VARIANCE_SUMMARY_FILE: &str = "variance_summary.csv";
pub const STATE_STATS_FILE: &str = "state_stats.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const ROC_FILE: &str = "roc_points.csv";
pub const MODEL_FILE: &str = "model.json";
pub const IMPORTANCE_FILE: &str = "importance.csv";
pub const SHAP_POINTS_FILE: &str = "shap_points.csv";
pub const SUMMARY_FILE: &str = "run_summary.json";

const FEATURE_KEY_COLUMNS: [&str; 4] = ["window_id", "subject", "modality", "label"];

// Seed streams for the model stored alongside the metrics and for the
// explanation sample; the evaluation itself uses streams 1, 2, 100+ and 200.
const MODEL_STREAM: u64 = 200;
const BACKGROUND_STREAM: u64 = 300;
const EXPLAIN_STREAM: u64 = 301;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    de.disable_recursion_limit();
    T::deserialize(&mut de).map_err(|e| CliError::format(path, e))
}

/// Accepts one subject spec or a named list of them.
#[derive(Deserialize)]
#[serde(untagged)]
enum SynthFile {
    Many { dataset_name: String, subjects: Vec<SyntheticSpec> },
    One(SyntheticSpec),
}

impl SynthFile {
    fn load(path: &Path, seed: Option<u64>) -> Result<(String, Vec<SyntheticSpec>), CliError> {
        if !path.is_file() {
            return Err(CliError::MissingInput(path.display().to_string()));
        }
        let (name, mut specs) = match read_json(path)? {
            SynthFile::Many { dataset_name, subjects } => (dataset_name, subjects),
            SynthFile::One(s) => ("synthetic".to_string(), vec![s]),
        };
        if specs.is_empty() {
            return Err(CliError::ConfigInvalid("subjects".into()));
        }
        if let Some(s) = seed {
            for (i, spec) in specs.iter_mut().enumerate() {
                spec.seed = RngSeed(s).derive(i as u64);
            }
        }
        Ok((name, specs))
    }

    fn generate(path: &Path, seed: Option<u64>) -> Result<(Dataset, Vec<(String, GroundTruth)>), CliError> {
        let (name, specs) = Self::load(path, seed)?;
        let mut subjects = Vec::new();
        let mut truth = Vec::new();
        for spec in &specs {
            let rec = generate_synthetic(spec)?;
            truth.push((spec.subject_id.clone(), rec.truth.clone()));
            subjects.push(rec.into_bundle());
        }
        Ok((Dataset { name, label_scheme: specs[0].scheme(), subjects }, truth))
    }
}

#[derive(Serialize)]
struct TruthFile<'a> {
    subjects: Vec<TruthSubject<'a>>,
}

#[derive(Serialize)]
struct TruthSubject<'a> {
    subject_id: &'a str,
    truth: &'a GroundTruth,
}

/// Writes a canonical dataset plus `truth.json` with the exact beat times.
pub fn synth(spec: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let (dataset, truth) = SynthFile::generate(spec, seed)?;
    write_canonical(&dataset, out)?;
    let file = TruthFile { subjects: truth.iter().map(|(s, t)| TruthSubject { subject_id: s, truth: t }).collect() };
    let path = out.join("truth.json");
    fs::write(&path, crate::output::to_rounded_json(&file)).map_err(|e| CliError::io(&path, e))
}

pub fn adapt(raw: &Path, out: &Path, case: bool) -> Result<(), CliError> {
    if case {
        adapt_case(raw, out)?;
    } else {
        adapt_wesad(raw, out)?;
    }
    Ok(())
}

fn load_input(cfg: &PipelineConfig) -> Result<Dataset, CliError> {
    match (&cfg.manifest, &cfg.synthetic_spec) {
        (Some(m), _) => {
            let path = if m.is_dir() { m.join(MANIFEST_FILE) } else { m.clone() };
            Ok(load_dataset(&path)?)
        }
        (None, Some(s)) => Ok(SynthFile::generate(s, None)?.0),
        (None, None) => Err(CliError::ConfigInvalid("manifest or synthetic_spec".into())),
    }
}

pub fn extract(cfg: &PipelineConfig, run: &RunDir) -> Result<(), CliError> {
    let dataset = load_input(cfg)?;
    let rows = extract_dataset(&dataset, &cfg.extract_config())?;
    let header: Vec<&str> = FEATURE_KEY_COLUMNS.iter().chain(FEATURE_NAMES.iter()).copied().collect();
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut rec = vec![r.window_id.to_string(), r.subject_id.clone(), r.modality.to_string(), r.label.to_string()];
            rec.extend(r.features.iter().map(|v| fmt_opt(*v)));
            rec
        })
        .collect();
    run.write_csv(FEATURES_FILE, &header, &records)?;
    Ok(())
}

/// Parses `features.csv`; empty cells are missing values.
pub fn read_features(path: &Path) -> Result<Vec<FeatureRow>, CliError> {
    let (header, records) = read_csv(path)?;
    let expected: Vec<&str> = FEATURE_KEY_COLUMNS.iter().chain(FEATURE_NAMES.iter()).copied().collect();
    if header != expected {
        return Err(CliError::format(path, format!("expected header {}", expected.join(","))));
    }
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let bad = |what: &str| CliError::format(path, format!("row {}: bad {what}", i + 1));
            let mut features = [None; FEATURE_COUNT];
            for (f, cell) in features.iter_mut().zip(rec.iter().skip(4)) {
                if !cell.is_empty() {
                    *f = Some(cell.parse::<f64>().map_err(|_| bad("feature value"))?);
                }
            }
            Ok(FeatureRow {
                window_id: rec[0].parse().map_err(|_| bad("window_id"))?,
                subject_id: rec[1].to_string(),
                modality: rec[2].parse().map_err(|_| bad("modality"))?,
                label: rec[3].parse().map_err(|_| bad("label"))?,
                features,
            })
        })
        .collect()
}

fn by_modality(rows: &[FeatureRow], m: Modality) -> Vec<FeatureRow> {
    rows.iter().filter(|r| r.modality == m).cloned().collect()
}

pub fn variance(run: &RunDir) -> Result<(), CliError> {
    let rows = read_features(&run.input(FEATURES_FILE)?)?;
    let v = inter_signal_variance(&by_modality(&rows, Modality::Ecg), &by_modality(&rows, Modality::Ppg))?;

    let mut diff_rows = Vec::new();
    for f in &v.features {
        for d in &f.entries {
            diff_rows.push(vec![d.subject_id.clone(), d.window_id.to_string(), f.feature.to_string(), fmt_num(d.abs_diff)]);
        }
    }
    run.write_csv(VARIANCE_FILE, &["subject", "window_id", "feature", "abs_diff"], &diff_rows)?;

    let summary: Vec<Vec<String>> = v
        .features
        .iter()
        .map(|f| {
            vec![
                f.feature.to_string(),
                f.entries.len().to_string(),
                f.missing_count.to_string(),
                fmt_num(f.mean),
                fmt_num(f.max),
                fmt_num(f.pooled_mean),
                fmt_opt(f.normalized_mean),
            ]
        })
        .collect();
    run.write_csv(
        VARIANCE_SUMMARY_FILE,
        &["feature", "n_compared", "missing_count", "mean_abs_diff", "max_abs_diff", "pooled_mean", "normalized_mean"],
        &summary,
    )?;

    let stats = state_feature_stats(&rows);
    let stat_rows: Vec<Vec<String>> = stats
        .groups
        .iter()
        .map(|g| {
            let mut r = vec![g.feature.to_string(), g.label.to_string(), g.modality.to_string(), g.n.to_string()];
            match &g.summary {
                Some(s) => r.extend(
                    [s.min, s.q1, s.q2, s.q3, s.max, s.mean, s.std].iter().map(|x| fmt_num(*x)).chain([s.outlier_count.to_string()]),
                ),
                None => r.extend(std::iter::repeat_n(String::new(), 8)),
            }
            r
        })
        .collect();
    run.write_csv(
        STATE_STATS_FILE,
        &["feature", "state", "modality", "n", "min", "q1", "q2", "q3", "max", "mean", "std", "outlier_count"],
        &stat_rows,
    )?;

    // line chart of |ECG - PPG| relative to each feature's pooled mean
    let series: Vec<(String, Vec<(f64, f64)>)> = v
        .features
        .iter()
        .filter(|f| f.pooled_mean > 0.0)
        .map(|f| (f.feature.to_string(), f.entries.iter().enumerate().map(|(i, d)| (i as f64, d.abs_diff / f.pooled_mean)).collect()))
        .collect();
    run.write_svg("variance.svg", &svg::line_chart("ECG vs PPG feature difference", "aligned window", "|ECG - PPG| / pooled mean", &series))?;

    for feature in FEATURE_NAMES {
        let boxes: Vec<(usize, BoxStats)> = stats
            .groups
            .iter()
            .filter(|g| g.feature == feature)
            .filter_map(|g| {
                let s = g.summary.as_ref()?;
                let series = Modality::ALL.iter().position(|m| *m == g.modality).unwrap_or(0);
                Some((series, BoxStats { name: format!("{} {}", g.modality, g.label), min: s.min, q1: s.q1, q2: s.q2, q3: s.q3, max: s.max }))
            })
            .collect();
        run.write_svg(&format!("state_box_{feature}.svg"), &svg::box_chart(&format!("{feature} by state"), feature, &boxes))?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ClassAuc {
    class: String,
    auc: f64,
}

#[derive(Serialize, Deserialize)]
struct ModalityMetrics {
    classes: Vec<String>,
    split: String,
    families: Vec<FamilyCv>,
    selected_family: String,
    fold_accuracies: Vec<f64>,
    mean_cv_accuracy: f64,
    holdout_accuracy: f64,
    /// Rows are true classes, columns predicted.
    confusion: Vec<Vec<usize>>,
    auc: Vec<ClassAuc>,
    n_train: usize,
    n_test: usize,
    n_dropped: usize,
}

#[derive(Serialize, Deserialize)]
struct MetricsFile {
    modalities: BTreeMap<Modality, ModalityMetrics>,
}

#[derive(Serialize, Deserialize)]
struct StoredModel {
    classes: Vec<String>,
    /// `(subject, window_id)` of the training and hold-out rows.
    train_keys: Vec<(String, usize)>,
    test_keys: Vec<(String, usize)>,
    model: TreeEnsembleModel,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    config_hash: String,
    models: BTreeMap<Modality, StoredModel>,
}

fn keys(m: &LabeledMatrix, rows: &[usize]) -> Vec<(String, usize)> {
    rows.iter().map(|&i| (m.subjects[i].clone(), m.window_ids[i])).collect()
}

fn pick(x: &[Vec<f64>], rows: &[usize]) -> Vec<Vec<f64>> {
    rows.iter().map(|&i| x[i].clone()).collect()
}

pub fn train_eval(cfg: &PipelineConfig, run: &RunDir) -> Result<(), CliError> {
    let rows = read_features(&run.input(FEATURES_FILE)?)?;
    let families = cfg.learn.model_families()?;
    let feature_names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let mut metrics = MetricsFile { modalities: BTreeMap::new() };
    let mut models = ModelFile { config_hash: run.hash.clone(), models: BTreeMap::new() };
    let mut roc_rows = Vec::new();
    let mut roc_series = Vec::new();
    let mut cv_series = Vec::new();

    for modality in Modality::ALL {
        let m = LabeledMatrix::from_rows(&rows, modality);
        let classes = m.class_names();
        let split = if cfg.learn.subject_wise { SplitStrategy::SubjectWise(m.subjects.clone()) } else { SplitStrategy::RowWise };
        let ev = evaluate(&families, &m.x, &m.y, classes.len(), &split, cfg.seed)?;
        let r = &ev.report;

        // the stored model is always the tree ensemble, fit as the evaluation would
        let trees = match ev.model {
            FittedModel::ExtraTrees(t) => t,
            _ => {
                let y_tr: Vec<usize> = ev.train_rows.iter().map(|&i| m.y[i]).collect();
                train_extra_trees(&pick(&m.x, &ev.train_rows), &y_tr, classes.len(), &cfg.learn.tree_params(), cfg.seed.derive(MODEL_STREAM))?
            }
        };
        models.models.insert(
            modality,
            StoredModel {
                classes: classes.clone(),
                train_keys: keys(&m, &ev.train_rows),
                test_keys: keys(&m, &ev.test_rows),
                model: trees.with_names(classes.clone(), feature_names.clone()),
            },
        );

        for c in &r.roc {
            for (fpr, tpr) in &c.curve.points {
                roc_rows.push(vec![modality.to_string(), classes[c.class].clone(), fmt_num(*fpr), fmt_num(*tpr)]);
            }
            roc_series.push((format!("{modality} {} (AUC {})", classes[c.class], fmt_num(c.curve.auc)), c.curve.points.clone()));
        }
        for f in &r.families {
            cv_series.push((format!("{modality} {}", f.family), f.fold_accuracies.iter().enumerate().map(|(k, a)| (k as f64 + 1.0, *a)).collect()));
        }
        metrics.modalities.insert(
            modality,
            ModalityMetrics {
                classes: classes.clone(),
                split: r.split.clone(),
                families: r.families.clone(),
                selected_family: r.selected_family.clone(),
                fold_accuracies: r.fold_accuracies.clone(),
                mean_cv_accuracy: r.mean_cv_accuracy,
                holdout_accuracy: r.holdout_accuracy,
                confusion: r.confusion.clone(),
                auc: r.roc.iter().map(|c| ClassAuc { class: classes[c.class].clone(), auc: c.curve.auc }).collect(),
                n_train: r.n_train,
                n_test: r.n_test,
                n_dropped: m.dropped,
            },
        );
    }

    run.write_json(METRICS_FILE, &metrics)?;
    run.write_csv(ROC_FILE, &["modality", "class", "fpr", "tpr"], &roc_rows)?;
    // thresholds keep full precision so routing survives the round trip
    let text = serde_json::to_string_pretty(&models).expect("model serializes") + "\n";
    run.write_text(MODEL_FILE, &text)?;
    run.write_svg("roc.svg", &svg::roc_chart("One-vs-rest ROC on the hold-out", &roc_series))?;
    run.write_svg("cv_accuracy.svg", &svg::line_chart("Cross-validation accuracy", "fold", "accuracy", &cv_series))?;
    Ok(())
}

fn rank_of(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut rank = vec![0; values.len()];
    for (r, &j) in order.iter().enumerate() {
        rank[j] = r + 1;
    }
    rank
}

pub fn importance(cfg: &PipelineConfig, run: &RunDir) -> Result<(), CliError> {
    let rows = read_features(&run.input(FEATURES_FILE)?)?;
    let model_path = run.input(MODEL_FILE)?;
    let stored: ModelFile = read_json(&model_path)?;
    if stored.config_hash != run.hash {
        return Err(CliError::format(&model_path, format!("written under configuration {}", stored.config_hash)));
    }
    let mut imp_rows = Vec::new();
    let mut point_rows = Vec::new();

    for (modality, sm) in &stored.models {
        let m = LabeledMatrix::from_rows(&rows, *modality);
        if m.class_names() != sm.classes {
            return Err(CliError::format(&model_path, format!("{modality} classes differ from {FEATURES_FILE}")));
        }
        let index: HashMap<(&str, usize), usize> =
            m.subjects.iter().zip(&m.window_ids).enumerate().map(|(i, (s, w))| ((s.as_str(), *w), i)).collect();
        let lookup = |keys: &[(String, usize)]| -> Result<Vec<usize>, CliError> {
            keys.iter()
                .map(|(s, w)| index.get(&(s.as_str(), *w)).copied().ok_or_else(|| CliError::format(&model_path, format!("row {s}/{w} not in {FEATURES_FILE}"))))
                .collect()
        };
        let train = lookup(&sm.train_keys)?;
        let test = lookup(&sm.test_keys)?;
        let bg_pick = sample_rows(train.len(), cfg.explain.background_size, cfg.seed.derive(BACKGROUND_STREAM));
        let background: Vec<Vec<f64>> = bg_pick.iter().map(|&i| m.x[train[i]].clone()).collect();
        let x_te = pick(&m.x, &test);
        let y_te: Vec<usize> = test.iter().map(|&i| m.y[i]).collect();
        let report: ImportanceReport = global_importance(&sm.model, &x_te, &y_te, &background, cfg.explain.max_rows, cfg.seed.derive(EXPLAIN_STREAM))?;

        let global_rank = rank_of(&report.mean_abs_phi);
        for &j in &report.ranking {
            imp_rows.push(vec![modality.to_string(), FEATURE_NAMES[j].into(), "global".into(), fmt_num(report.mean_abs_phi[j]), global_rank[j].to_string()]);
        }
        for c in &report.per_class {
            let rank = rank_of(&c.mean_abs_phi);
            let mut order: Vec<usize> = (0..FEATURE_COUNT).collect();
            order.sort_by_key(|&j| rank[j]);
            for j in order {
                imp_rows.push(vec![modality.to_string(), FEATURE_NAMES[j].into(), sm.classes[c.class].clone(), fmt_num(c.mean_abs_phi[j]), rank[j].to_string()]);
            }
        }
        for p in &report.points {
            let row = test[p.instance];
            point_rows.push(vec![
                modality.to_string(),
                m.subjects[row].clone(),
                m.window_ids[row].to_string(),
                sm.classes[p.class].clone(),
                FEATURE_NAMES[p.feature].into(),
                fmt_num(p.phi),
                fmt_num(p.value),
            ]);
        }
        let bars: Vec<(String, f64)> = report.ranking.iter().map(|&j| (FEATURE_NAMES[j].to_string(), report.mean_abs_phi[j])).collect();
        run.write_svg(&format!("importance_{modality}.svg"), &svg::bar_chart(&format!("{modality} mean |SHAP|"), "mean |SHAP value|", &bars))?;
    }
    run.write_csv(IMPORTANCE_FILE, &["modality", "feature", "scope", "mean_abs_shap", "rank"], &imp_rows)?;
    run.write_csv(SHAP_POINTS_FILE, &["modality", "subject", "window_id", "class", "feature", "shap", "feature_value"], &point_rows)?;
    Ok(())
}

#[derive(Serialize)]
struct FeatureCounts {
    modality: Modality,
    windows: usize,
    complete: usize,
    labels: BTreeMap<String, usize>,
}

#[derive(Serialize)]
struct VarianceEntry {
    feature: String,
    mean_abs_diff: f64,
    normalized_mean: Option<f64>,
}

#[derive(Serialize)]
struct VarianceSection {
    mean_normalized_variance: f64,
    features: Vec<VarianceEntry>,
}

#[derive(Serialize)]
struct ModalitySummary {
    modality: Modality,
    selected_family: String,
    mean_cv_accuracy: f64,
    holdout_accuracy: f64,
    auc: Vec<ClassAuc>,
    top_features: Option<Vec<String>>,
}

#[derive(Serialize)]
struct RunSummary {
    config: PipelineConfig,
    features: Vec<FeatureCounts>,
    variance: Option<VarianceSection>,
    classification: Vec<ModalitySummary>,
    ecg_minus_ppg_holdout_accuracy: f64,
}

fn parse_num(path: &Path, s: &str) -> Result<f64, CliError> {
    s.parse().map_err(|_| CliError::format(path, format!("bad number '{s}'")))
}

pub fn report(cfg: &PipelineConfig, run: &RunDir) -> Result<(), CliError> {
    let rows = read_features(&run.input(FEATURES_FILE)?)?;
    let metrics: MetricsFile = read_json(&run.input(METRICS_FILE)?)?;

    let features = Modality::ALL
        .iter()
        .map(|&modality| {
            let mine: Vec<&FeatureRow> = rows.iter().filter(|r| r.modality == modality).collect();
            let mut labels = BTreeMap::new();
            for r in &mine {
                *labels.entry(r.label.to_string()).or_insert(0) += 1;
            }
            FeatureCounts { modality, windows: mine.len(), complete: mine.iter().filter(|r| r.complete().is_some()).count(), labels }
        })
        .collect();

    let variance = match run.input(VARIANCE_SUMMARY_FILE) {
        Ok(path) => {
            let (_, recs) = read_csv(&path)?;
            let mut entries = Vec::new();
            for r in &recs {
                let normalized_mean = if r[6].is_empty() { None } else { Some(parse_num(&path, &r[6])?) };
                entries.push(VarianceEntry { feature: r[0].to_string(), mean_abs_diff: parse_num(&path, &r[3])?, normalized_mean });
            }
            let norm: Vec<f64> = entries.iter().filter_map(|e| e.normalized_mean).collect();
            let mean_normalized_variance = norm.iter().sum::<f64>() / norm.len().max(1) as f64;
            Some(VarianceSection { mean_normalized_variance, features: entries })
        }
        Err(_) => None,
    };

    let mut top: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
    if let Ok(path) = run.input(IMPORTANCE_FILE) {
        let (_, recs) = read_csv(&path)?;
        for r in recs.iter().filter(|r| &r[2] == "global") {
            let rank = r[4].parse().map_err(|_| CliError::format(&path, "bad rank"))?;
            top.entry(r[0].to_string()).or_default().push((rank, r[1].to_string()));
        }
    }
    let classification: Vec<ModalitySummary> = metrics
        .modalities
        .into_iter()
        .map(|(modality, m)| ModalitySummary {
            modality,
            selected_family: m.selected_family,
            mean_cv_accuracy: m.mean_cv_accuracy,
            holdout_accuracy: m.holdout_accuracy,
            auc: m.auc,
            top_features: top.remove(modality.as_str()).map(|mut v| {
                v.sort();
                v.into_iter().map(|x| x.1).collect()
            }),
        })
        .collect();
    let acc = |m: Modality| classification.iter().find(|c| c.modality == m).map_or(0.0, |c| c.holdout_accuracy);
    let gap = acc(Modality::Ecg) - acc(Modality::Ppg);
    run.write_json(SUMMARY_FILE, &RunSummary { config: cfg.clone(), features, variance, classification, ecg_minus_ppg_holdout_accuracy: gap })?;
    Ok(())
}
