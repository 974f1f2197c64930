//! Bagged decision trees: bootstrap sampling, Gini-split induction over all
//! features, majority-vote prediction.
//!
//! No random feature subsets are used: every feature is considered at every
//! node and randomness enters only through the per-tree bootstrap, which is
//! drawn from an RNG substream keyed by tree index so training is
//! reproducible regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::telemetry::Label;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("gini impurity is undefined for all-zero counts")]
    EmptyCounts,
    #[error("training requires at least one instance of each class")]
    SingleClass,
    #[error("training requires a non-empty instance list")]
    EmptyTrainingSet,
    #[error("features and labels have different lengths ({features} vs {labels})")]
    LengthMismatch { features: usize, labels: usize },
    #[error("invalid hyperparameter: {0}")]
    BadHyperparam(String),
    #[error("dimension mismatch: model expects {expected}, vector has {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl ForestHyperparams {
    pub fn new(n_trees: usize, seed: u64) -> Self {
        Self {
            n_trees,
            min_leaf: 1,
            seed,
        }
    }
}

/// Tree node; `counts` are (negative, positive) class counts at the leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        label: Label,
        counts: [usize; 2],
    },
    /// Left branch takes feature <= threshold.
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary decision tree stored as a pre-order node list; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    /// Label used on exact vote ties.
    pub tie_break: Label,
    pub seed: u64,
    pub n_features: usize,
}

/// Gini diversity index 1 - sum_k p_k^2.
pub fn gini_impurity(counts: &[usize]) -> Result<f64, ForestError> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(ForestError::EmptyCounts);
    }
    let t = total as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

fn class_index(label: Label) -> usize {
    usize::from(label == 1)
}

fn counts_of(labels: impl Iterator<Item = Label>) -> [usize; 2] {
    let mut counts = [0usize; 2];
    for l in labels {
        counts[class_index(l)] += 1;
    }
    counts
}

fn gini_of(counts: [usize; 2]) -> f64 {
    gini_impurity(&counts).unwrap_or(0.0)
}

fn best_split_indices(
    features: &[Vec<f64>],
    labels: &[Label],
    indices: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = indices.len();
    if n < 2 {
        return None;
    }
    let parent_counts = counts_of(indices.iter().map(|&i| labels[i]));
    let parent_gini = gini_of(parent_counts);
    if parent_gini == 0.0 {
        return None;
    }
    let dim = features[indices[0]].len();
    let mut best: Option<Split> = None;
    let mut order: Vec<usize> = indices.to_vec();
    for feature in 0..dim {
        order.sort_by(|&a, &b| features[a][feature].partial_cmp(&features[b][feature]).unwrap());
        let mut left = [0usize; 2];
        let mut right = parent_counts;
        for pos in 0..n - 1 {
            let idx = order[pos];
            left[class_index(labels[idx])] += 1;
            right[class_index(labels[idx])] -= 1;
            let v = features[idx][feature];
            let next = features[order[pos + 1]][feature];
            if v == next {
                continue; // ties share a side; cut only between distinct values
            }
            let n_left = pos + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let threshold = v + (next - v) / 2.0;
            let decrease = parent_gini
                - (n_left as f64 / n as f64) * gini_of(left)
                - (n_right as f64 / n as f64) * gini_of(right);
            if decrease > 0.0 && best.map_or(true, |b| decrease > b.impurity_decrease) {
                best = Some(Split {
                    feature,
                    threshold,
                    impurity_decrease: decrease,
                });
            }
        }
    }
    best
}

/// Best Gini split over all features and all midpoints between consecutive
/// distinct sorted values; ties broken by lowest feature index then lowest
/// threshold. `None` when the node is pure or no split has positive decrease.
pub fn best_split(features: &[Vec<f64>], labels: &[Label]) -> Option<Split> {
    let indices: Vec<usize> = (0..features.len()).collect();
    best_split_indices(features, labels, &indices, 1)
}

fn majority_label(counts: [usize; 2]) -> Label {
    if counts[1] > counts[0] {
        1
    } else {
        -1 // ties go to quiet
    }
}

fn grow_node(
    features: &[Vec<f64>],
    labels: &[Label],
    indices: &[usize],
    min_leaf: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let counts = counts_of(indices.iter().map(|&i| labels[i]));
    let leaf = |nodes: &mut Vec<Node>| {
        nodes.push(Node::Leaf {
            label: majority_label(counts),
            counts,
        });
        nodes.len() - 1
    };
    if counts[0] == 0 || counts[1] == 0 || indices.len() < 2 * min_leaf {
        return leaf(nodes);
    }
    let Some(split) = best_split_indices(features, labels, indices, min_leaf) else {
        return leaf(nodes);
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| features[i][split.feature] <= split.threshold);
    let this = nodes.len();
    nodes.push(Node::Internal {
        feature: split.feature,
        threshold: split.threshold,
        left: 0,
        right: 0,
    });
    let left = grow_node(features, labels, &left_idx, min_leaf, nodes);
    let right = grow_node(features, labels, &right_idx, min_leaf, nodes);
    if let Node::Internal {
        left: l, right: r, ..
    } = &mut nodes[this]
    {
        *l = left;
        *r = right;
    }
    this
}

/// Grows a tree by recursive Gini splitting until nodes are pure, smaller
/// than 2*min_leaf, or admit no positive-gain split. All features are
/// considered at every node.
pub fn grow_tree(features: &[Vec<f64>], labels: &[Label], min_leaf: usize) -> DecisionTree {
    let indices: Vec<usize> = (0..features.len()).collect();
    let mut nodes = Vec::new();
    grow_node(features, labels, &indices, min_leaf.max(1), &mut nodes);
    DecisionTree { nodes }
}

/// Single-tree prediction.
pub fn predict_tree(tree: &DecisionTree, x: &[f64]) -> Label {
    let mut node = 0usize;
    loop {
        match &tree.nodes[node] {
            Node::Leaf { label, .. } => return *label,
            Node::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                node = if x[*feature] <= *threshold { *left } else { *right };
            }
        }
    }
}

/// Trains `n_trees` trees, each on a bootstrap sample of size n drawn from an
/// RNG substream keyed by (seed, tree index). Result is independent of the
/// number of training threads.
pub fn train_forest(
    features: &[Vec<f64>],
    labels: &[Label],
    h: &ForestHyperparams,
) -> Result<ForestModel, ForestError> {
    if h.n_trees == 0 {
        return Err(ForestError::BadHyperparam("n_trees must be >= 1".into()));
    }
    if h.min_leaf == 0 {
        return Err(ForestError::BadHyperparam("min_leaf must be >= 1".into()));
    }
    let n = features.len();
    if n == 0 {
        return Err(ForestError::EmptyTrainingSet);
    }
    if labels.len() != n {
        return Err(ForestError::LengthMismatch {
            features: n,
            labels: labels.len(),
        });
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(ForestError::SingleClass);
    }
    let trees: Vec<DecisionTree> = (0..h.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(h.seed);
            rng.set_stream(t as u64);
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let boot_features: Vec<Vec<f64>> =
                sample.iter().map(|&i| features[i].clone()).collect();
            let boot_labels: Vec<Label> = sample.iter().map(|&i| labels[i]).collect();
            grow_tree(&boot_features, &boot_labels, h.min_leaf)
        })
        .collect();
    Ok(ForestModel {
        trees,
        tie_break: -1,
        seed: h.seed,
        n_features: features[0].len(),
    })
}

/// Majority vote over all trees; exact ties return the model's tie_break
/// label (quiet).
pub fn predict_forest(m: &ForestModel, x: &[f64]) -> Result<Label, ForestError> {
    if x.len() != m.n_features {
        return Err(ForestError::DimensionMismatch {
            expected: m.n_features,
            got: x.len(),
        });
    }
    let positive = m
        .trees
        .iter()
        .filter(|t| predict_tree(t, x) == 1)
        .count();
    let negative = m.trees.len() - positive;
    Ok(if positive > negative { 1 } else { m.tie_break })
}
