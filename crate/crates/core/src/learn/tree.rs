//! Extremely randomized trees.
//!
//! Every tree sees the whole training set. At each node up to `k_features`
//! non-constant features are drawn without replacement; each gets a single
//! threshold drawn uniformly inside its open range at that node, and the
//! candidate with the greatest Gini decrease wins.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_input, Classifier, LearnError};
use crate::model::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtraTreesParams {
    pub n_trees: usize,
    /// Candidates per split; `None` means `ceil(sqrt(n_features))`.
    pub k_features: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for ExtraTreesParams {
    fn default() -> Self {
        Self { n_trees: 100, k_features: None, min_samples_leaf: 2 }
    }
}

impl ExtraTreesParams {
    pub fn resolved_k(&self, n_features: usize) -> usize {
        self.k_features.unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize).clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { proba: Vec<f64> },
}

/// Arena-allocated tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Leaf reached by `x`: rows with `x[feature] <= threshold` go left.
    pub fn leaf(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { proba } => return proba,
            }
        }
    }

    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsembleModel {
    pub trees: Vec<Tree>,
    pub params: ExtraTreesParams,
    pub k_features: usize,
    pub seed: RngSeed,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn class_counts(rows: &[usize], y: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &r in rows {
        counts[y[r]] += 1;
    }
    counts
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    k: usize,
    min_leaf: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl Builder<'_> {
    fn leaf(&mut self, counts: &[usize], n: usize) -> usize {
        let proba = counts.iter().map(|&c| c as f64 / n as f64).collect();
        self.nodes.push(Node::Leaf { proba });
        self.nodes.len() - 1
    }

    fn best_split(&mut self, rows: &[usize], counts: &[usize]) -> Option<Candidate> {
        let n_features = self.x[0].len();
        let mut order: Vec<usize> = (0..n_features).collect();
        order.shuffle(&mut self.rng);
        let parent = gini(counts, rows.len());
        let mut best: Option<Candidate> = None;
        let mut drawn = 0;
        for feature in order {
            if drawn == self.k {
                break;
            }
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                let v = self.x[r][feature];
                (lo.min(v), hi.max(v))
            });
            if !(hi > lo) {
                continue;
            }
            drawn += 1;
            let threshold = loop {
                let t = self.rng.random_range(lo..hi);
                if t > lo {
                    break t;
                }
            };
            let mut left = vec![0; self.n_classes];
            let mut n_left = 0;
            for &r in rows {
                if self.x[r][feature] <= threshold {
                    left[self.y[r]] += 1;
                    n_left += 1;
                }
            }
            let n_right = rows.len() - n_left;
            if n_left < self.min_leaf || n_right < self.min_leaf {
                continue;
            }
            let right: Vec<usize> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
            let n = rows.len() as f64;
            let decrease = parent - (n_left as f64 / n) * gini(&left, n_left) - (n_right as f64 / n) * gini(&right, n_right);
            if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                best = Some(Candidate { feature, threshold, decrease });
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>) -> usize {
        let counts = class_counts(&rows, self.y, self.n_classes);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < 2 * self.min_leaf {
            return self.leaf(&counts, rows.len());
        }
        let Some(split) = self.best_split(&rows, &counts) else {
            return self.leaf(&counts, rows.len());
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x[r][split.feature] <= split.threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { proba: Vec::new() });
        let left = self.build(left_rows);
        let right = self.build(right_rows);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        id
    }
}

/// Trains the ensemble; tree `t` draws from the stream `seed.derive(t)`.
pub fn train_extra_trees(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    params: &ExtraTreesParams,
    seed: RngSeed,
) -> Result<TreeEnsembleModel, LearnError> {
    check_training_input(x, y, n_classes)?;
    if params.n_trees == 0 || params.min_samples_leaf == 0 {
        return Err(LearnError::InvalidParams("n_trees and min_samples_leaf must be positive".into()));
    }
    let n_features = x[0].len();
    let k = params.resolved_k(n_features);
    let trees = (0..params.n_trees as u64)
        .into_par_iter()
        .map(|t| {
            let mut b = Builder {
                x,
                y,
                n_classes,
                k,
                min_leaf: params.min_samples_leaf,
                rng: seed.derive(t).rng(),
                nodes: Vec::new(),
            };
            b.build((0..x.len()).collect());
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(TreeEnsembleModel {
        trees,
        params: *params,
        k_features: k,
        seed,
        class_names: (0..n_classes).map(|c| format!("class{c}")).collect(),
        feature_names: (0..n_features).map(|f| format!("f{f}")).collect(),
    })
}

impl TreeEnsembleModel {
    pub fn with_names(mut self, class_names: Vec<String>, feature_names: Vec<String>) -> Self {
        self.class_names = class_names;
        self.feature_names = feature_names;
        self
    }

    /// Features used by at least one split.
    pub fn used_features(&self) -> Vec<bool> {
        let mut used = vec![false; self.feature_names.len()];
        for t in &self.trees {
            for f in t.split_features() {
                used[f] = true;
            }
        }
        used
    }
}

impl Classifier for TreeEnsembleModel {
    fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, LearnError> {
        if x.len() != self.n_features() {
            return Err(LearnError::DimensionMismatch { expected: self.n_features(), got: x.len() });
        }
        let mut out = vec![0.0; self.n_classes()];
        for t in &self.trees {
            for (o, p) in out.iter_mut().zip(t.leaf(x)) {
                *o += p;
            }
        }
        let n = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        Ok(out)
    }
}

// JSON form: trees as nested nodes.

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NestedNode {
    Split { feature: usize, threshold: f64, left: Box<NestedNode>, right: Box<NestedNode> },
    Leaf { proba: Vec<f64> },
}

fn nest(tree: &Tree, i: usize) -> NestedNode {
    match &tree.nodes[i] {
        Node::Split { feature, threshold, left, right } => NestedNode::Split {
            feature: *feature,
            threshold: *threshold,
            left: Box::new(nest(tree, *left)),
            right: Box::new(nest(tree, *right)),
        },
        Node::Leaf { proba } => NestedNode::Leaf { proba: proba.clone() },
    }
}

fn flatten(node: NestedNode, nodes: &mut Vec<Node>) -> usize {
    match node {
        NestedNode::Leaf { proba } => {
            nodes.push(Node::Leaf { proba });
            nodes.len() - 1
        }
        NestedNode::Split { feature, threshold, left, right } => {
            let id = nodes.len();
            nodes.push(Node::Leaf { proba: Vec::new() });
            let l = flatten(*left, nodes);
            let r = flatten(*right, nodes);
            nodes[id] = Node::Split { feature, threshold, left: l, right: r };
            id
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    kind: String,
    n_trees: usize,
    k_features: usize,
    min_samples_leaf: usize,
    seed: RngSeed,
    class_names: Vec<String>,
    feature_names: Vec<String>,
    trees: Vec<NestedNode>,
}

const MODEL_KIND: &str = "extra_trees_classifier";

impl Serialize for TreeEnsembleModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ModelDocument {
            kind: MODEL_KIND.into(),
            n_trees: self.trees.len(),
            k_features: self.k_features,
            min_samples_leaf: self.params.min_samples_leaf,
            seed: self.seed,
            class_names: self.class_names.clone(),
            feature_names: self.feature_names.clone(),
            trees: self.trees.iter().map(|t| nest(t, 0)).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TreeEnsembleModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = ModelDocument::deserialize(deserializer)?;
        if doc.kind != MODEL_KIND {
            return Err(serde::de::Error::custom(format!("expected kind '{MODEL_KIND}', got '{}'", doc.kind)));
        }
        let trees = doc
            .trees
            .into_iter()
            .map(|n| {
                let mut nodes = Vec::new();
                flatten(n, &mut nodes);
                Tree { nodes }
            })
            .collect();
        Ok(TreeEnsembleModel {
            trees,
            params: ExtraTreesParams { n_trees: doc.n_trees, k_features: Some(doc.k_features), min_samples_leaf: doc.min_samples_leaf },
            k_features: doc.k_features,
            seed: doc.seed,
            class_names: doc.class_names,
            feature_names: doc.feature_names,
        })
    }
}

impl TreeEnsembleModel {
    /// Parses a model document without a nesting-depth limit.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        Self::deserialize(&mut de)
    }
}
