//! Exact interventional Shapley values.
//!
//! The value of a coalition S is the mean, over background rows b, of the
//! explained class probability on the composite row that takes features in
//! S from the instance and all others from b. Every one of the 2^M
//! coalition values is tabulated, then combined with the Shapley weights.
//!
//! For tree ensembles the table is filled without re-evaluating the model:
//! walking a tree with instance x and background b, a split where x and b
//! disagree is decided solely by whether its feature is in S, so each
//! reachable leaf contributes to exactly the coalitions that contain one
//! mask of features and avoid another.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::learn::{Classifier, LearnError, Node, TreeEnsembleModel};
use crate::model::RngSeed;

/// Coalition tables are `2^M` entries; beyond this they stop being desk-scale.
pub const MAX_FEATURES: usize = 20;
pub const DEFAULT_BACKGROUND: usize = 100;
pub const DEFAULT_MAX_ROWS: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExplainError {
    #[error("background set is empty")]
    EmptyBackground,
    #[error("no rows to explain")]
    EmptySample,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0} features exceed the exhaustive-coalition limit")]
    TooManyFeatures(usize),
    #[error("class {class} outside 0..{n_classes}")]
    ClassOutOfRange { class: usize, n_classes: usize },
    #[error(transparent)]
    Learn(#[from] LearnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub instance: usize,
    pub class: usize,
    pub base_value: f64,
    pub phi: Vec<f64>,
}

impl ShapExplanation {
    /// `base_value + sum(phi)`, the reconstructed model output.
    pub fn output(&self) -> f64 {
        self.base_value + self.phi.iter().sum::<f64>()
    }
}

fn check(m: usize, x: &[f64], background: &[Vec<f64>], n_classes: usize, class: usize) -> Result<(), ExplainError> {
    if background.is_empty() {
        return Err(ExplainError::EmptyBackground);
    }
    if m > MAX_FEATURES {
        return Err(ExplainError::TooManyFeatures(m));
    }
    if class >= n_classes {
        return Err(ExplainError::ClassOutOfRange { class, n_classes });
    }
    for r in std::iter::once(x).chain(background.iter().map(Vec::as_slice)) {
        if r.len() != m {
            return Err(ExplainError::DimensionMismatch { expected: m, got: r.len() });
        }
    }
    Ok(())
}

/// Shapley values from a full coalition table indexed by feature bitmask.
pub fn shapley_from_table(v: &[f64], m: usize) -> Vec<f64> {
    assert_eq!(v.len(), 1 << m, "coalition table size");
    // weight(s) = s! (m - s - 1)! / m!
    let mut weight = vec![0.0; m];
    for (s, w) in weight.iter_mut().enumerate() {
        let mut acc = 1.0 / m as f64;
        // 1 / (m * C(m-1, s))
        for j in 0..s {
            acc *= (j + 1) as f64 / (m - 1 - j) as f64;
        }
        *w = acc;
    }
    (0..m)
        .map(|i| {
            let bit = 1usize << i;
            let mut total = 0.0;
            for s in 0..(1usize << m) {
                if s & bit == 0 {
                    total += weight[s.count_ones() as usize] * (v[s | bit] - v[s]);
                }
            }
            total
        })
        .collect()
}

/// Coalition table by direct model evaluation of every composite row.
pub fn coalition_values_generic(
    model: &dyn Classifier,
    x: &[f64],
    background: &[Vec<f64>],
    class: usize,
) -> Result<Vec<f64>, ExplainError> {
    let m = model.n_features();
    check(m, x, background, model.n_classes(), class)?;
    let mut v = vec![0.0; 1 << m];
    let mut z = vec![0.0; m];
    for (s, out) in v.iter_mut().enumerate() {
        let mut acc = 0.0;
        for b in background {
            for j in 0..m {
                z[j] = if s >> j & 1 == 1 { x[j] } else { b[j] };
            }
            acc += model.predict_proba(&z)?[class];
        }
        *out = acc / background.len() as f64;
    }
    Ok(v)
}

/// Reachable leaves of one tree for instance x and background row b, as
/// `(must_in, must_out, leaf value)` coalition conditions.
fn leaf_conditions(nodes: &[Node], x: &[f64], b: &[f64], class: usize, out: &mut Vec<(u32, u32, f64)>) {
    let mut stack = vec![(0usize, 0u32, 0u32)];
    while let Some((i, must_in, must_out)) = stack.pop() {
        match &nodes[i] {
            Node::Leaf { proba } => out.push((must_in, must_out, proba[class])),
            Node::Split { feature, threshold, left, right } => {
                let pick = |v: f64| if v <= *threshold { *left } else { *right };
                let (gx, gb) = (pick(x[*feature]), pick(b[*feature]));
                let bit = 1u32 << feature;
                if gx == gb {
                    stack.push((gx, must_in, must_out));
                } else if must_in & bit != 0 {
                    stack.push((gx, must_in, must_out));
                } else if must_out & bit != 0 {
                    stack.push((gb, must_in, must_out));
                } else {
                    stack.push((gx, must_in | bit, must_out));
                    stack.push((gb, must_in, must_out | bit));
                }
            }
        }
    }
}

/// Coalition table for a tree ensemble from its leaf conditions.
pub fn coalition_values_tree(
    model: &TreeEnsembleModel,
    x: &[f64],
    background: &[Vec<f64>],
    class: usize,
) -> Result<Vec<f64>, ExplainError> {
    let m = model.n_features();
    check(m, x, background, model.n_classes(), class)?;
    let scale = 1.0 / (model.trees.len() * background.len()) as f64;
    let mut terms: HashMap<(u32, u32), f64> = HashMap::new();
    let mut buf = Vec::new();
    for tree in &model.trees {
        for b in background {
            buf.clear();
            leaf_conditions(&tree.nodes, x, b, class, &mut buf);
            for &(mi, mo, val) in &buf {
                *terms.entry((mi, mo)).or_insert(0.0) += val;
            }
        }
    }
    // sorted keys keep the summation order, and so the bits, reproducible
    let terms: BTreeMap<(u32, u32), f64> = terms.into_iter().collect();
    let full = (1u32 << m) - 1;
    let mut v = vec![0.0; 1 << m];
    for ((must_in, must_out), w) in terms {
        let free = full & !(must_in | must_out);
        let w = w * scale;
        // every subset of `free`, joined with must_in
        let mut sub = free;
        loop {
            v[(must_in | sub) as usize] += w;
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
    }
    Ok(v)
}

/// Exact Shapley explanation of one instance for one class.
pub fn shapley_explain(
    model: &TreeEnsembleModel,
    x: &[f64],
    background: &[Vec<f64>],
    class: usize,
) -> Result<ShapExplanation, ExplainError> {
    let v = coalition_values_tree(model, x, background, class)?;
    Ok(ShapExplanation { instance: 0, class, base_value: v[0], phi: shapley_from_table(&v, model.n_features()) })
}

/// Same contract for any classifier, by direct evaluation.
pub fn shapley_explain_generic(
    model: &dyn Classifier,
    x: &[f64],
    background: &[Vec<f64>],
    class: usize,
) -> Result<ShapExplanation, ExplainError> {
    let v = coalition_values_generic(model, x, background, class)?;
    Ok(ShapExplanation { instance: 0, class, base_value: v[0], phi: shapley_from_table(&v, model.n_features()) })
}

/// Sorted indices of at most `cap` of `n` rows, drawn without replacement.
pub fn sample_rows(n: usize, cap: usize, seed: RngSeed) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let mut idx = sample(&mut seed.rng(), n, cap).into_vec();
    idx.sort_unstable();
    idx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapPoint {
    pub instance: usize,
    pub class: usize,
    pub feature: usize,
    pub phi: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassImportance {
    pub class: usize,
    pub n_rows: usize,
    pub mean_abs_phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub mean_abs_phi: Vec<f64>,
    pub per_class: Vec<ClassImportance>,
    /// Features by descending global importance; ties by index.
    pub ranking: Vec<usize>,
    pub explanations: Vec<ShapExplanation>,
    pub points: Vec<ShapPoint>,
}

/// Explains up to `max_rows` seeded rows, each for its true class, and
/// aggregates mean |phi| globally and per class.
pub fn global_importance(
    model: &TreeEnsembleModel,
    rows: &[Vec<f64>],
    labels: &[usize],
    background: &[Vec<f64>],
    max_rows: usize,
    seed: RngSeed,
) -> Result<ImportanceReport, ExplainError> {
    if rows.is_empty() || max_rows == 0 {
        return Err(ExplainError::EmptySample);
    }
    if rows.len() != labels.len() {
        return Err(ExplainError::DimensionMismatch { expected: rows.len(), got: labels.len() });
    }
    let m = model.n_features();
    let chosen = sample_rows(rows.len(), max_rows, seed);
    let explanations = chosen
        .par_iter()
        .map(|&i| {
            shapley_explain(model, &rows[i], background, labels[i]).map(|mut e| {
                e.instance = i;
                e
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mean_abs = |es: &[&ShapExplanation]| -> Vec<f64> {
        (0..m).map(|j| es.iter().map(|e| e.phi[j].abs()).sum::<f64>() / es.len() as f64).collect()
    };
    let all: Vec<&ShapExplanation> = explanations.iter().collect();
    let mean_abs_phi = mean_abs(&all);
    let mut per_class = Vec::new();
    for class in 0..model.n_classes() {
        let es: Vec<&ShapExplanation> = explanations.iter().filter(|e| e.class == class).collect();
        if !es.is_empty() {
            per_class.push(ClassImportance { class, n_rows: es.len(), mean_abs_phi: mean_abs(&es) });
        }
    }
    let mut ranking: Vec<usize> = (0..m).collect();
    ranking.sort_by(|&a, &b| mean_abs_phi[b].total_cmp(&mean_abs_phi[a]).then(a.cmp(&b)));
    let points = explanations
        .iter()
        .flat_map(|e| {
            (0..m).map(move |j| ShapPoint { instance: e.instance, class: e.class, feature: j, phi: e.phi[j], value: rows[e.instance][j] })
        })
        .collect();
    Ok(ImportanceReport { mean_abs_phi, per_class, ranking, explanations, points })
}
