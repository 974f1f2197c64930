//! k-fold cross-validation, classification metrics and hyperparameter sweeps.
//!
//! Standardization (and, for the SVM, quadratic expansion) is fitted on each
//! fold's training split only and applied to its held-out fold, so no test
//! information leaks into preprocessing. Fold metrics are pooled by summing
//! confusion counts (micro-average); per-fold counts are kept in the report.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{
    apply_standardizer, fit_standardizer_rows, quadratic_expand, Standardizer,
};
use crate::forest::{self, ForestHyperparams, ForestModel};
use crate::svm::{self, SvmHyperparams, SvmModel};
use crate::telemetry::{Dataset, Label};

/// Default C grid: squares of 0.5 .. 4.5, bracketing the best reported C = 3.8^2.
pub const DEFAULT_C_GRID: [f64; 8] = [0.25, 1.0, 2.25, 4.0, 6.25, 9.0, 14.44, 20.25];
/// Default tree-count grid.
pub const DEFAULT_TREE_GRID: [usize; 8] = [1, 5, 10, 25, 50, 100, 200, 300];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("fold count k={k} must satisfy 2 <= k <= n (n={n})")]
    BadK { k: usize, n: usize },
    #[error("predictions and truth have different lengths ({predictions} vs {truth})")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("empty prediction list")]
    Empty,
    #[error("fold {fold}: training split contains a single class")]
    SingleClassFold { fold: usize },
    #[error("fold {fold}: training failed: {message}")]
    Train { fold: usize, message: String },
    #[error("parameter values must be strictly increasing and valid: {0}")]
    BadParamGrid(String),
    #[error("curve CSV line {line}: {msg}")]
    CurveParse { line: usize, msg: String },
}

/// Confusion counts with +1 (noisy) as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.true_negatives += other.true_negatives;
        self.false_negatives += other.false_negatives;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_fold: Vec<ConfusionCounts>,
    pub pooled: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub model_descriptor: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepCurve {
    pub rows: Vec<SweepPoint>,
}

/// Seeded uniform shuffle of 0..n partitioned into k folds whose sizes differ
/// by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 || k > n {
        return Err(EvalError::BadK { k, n });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let base = n / k;
    let rem = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut cursor = 0;
    for f in 0..k {
        let size = base + usize::from(f < rem);
        folds.push(indices[cursor..cursor + size].to_vec());
        cursor += size;
    }
    Ok(folds)
}

/// Stratified variant: each class is shuffled and dealt separately so folds
/// keep the overall class ratio.
pub fn stratified_kfold_split(
    labels: &[Label],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, EvalError> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(EvalError::BadK { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut next_fold = 0usize;
    for class in [1 as Label, -1] {
        let mut class_indices: Vec<usize> =
            (0..n).filter(|&i| labels[i] == class).collect();
        class_indices.shuffle(&mut rng);
        for idx in class_indices {
            folds[next_fold].push(idx);
            next_fold = (next_fold + 1) % k;
        }
    }
    Ok(folds)
}

/// Exact confusion counts with +1 as the positive class.
pub fn confusion(predictions: &[Label], truth: &[Label]) -> Result<ConfusionCounts, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p == 1, t == 1) {
            (true, true) => c.true_positives += 1,
            (true, false) => c.false_positives += 1,
            (false, false) => c.true_negatives += 1,
            (false, true) => c.false_negatives += 1,
        }
    }
    Ok(c)
}

/// precision = tp/(tp+fp), recall = tp/(tp+fn), F1 = 2PR/(P+R); 0/0 cases
/// yield 0 for the affected metric.
pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(c.true_positives, c.true_positives + c.false_positives);
    let recall = ratio(c.true_positives, c.true_positives + c.false_negatives);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics {
        precision,
        recall,
        f1,
    }
}

/// Feature expansion applied inside the CV loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expansion {
    None,
    Quadratic,
}

/// Order of standardization vs expansion; standardize-then-expand keeps the
/// quadratic terms well-scaled for the Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpandOrder {
    StandardizeThenExpand,
    ExpandThenStandardize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preprocess {
    pub expansion: Expansion,
    pub order: ExpandOrder,
}

impl Preprocess {
    pub fn plain() -> Self {
        Self {
            expansion: Expansion::None,
            order: ExpandOrder::StandardizeThenExpand,
        }
    }

    pub fn quadratic() -> Self {
        Self {
            expansion: Expansion::Quadratic,
            order: ExpandOrder::StandardizeThenExpand,
        }
    }

    /// Fits the preprocessing on training rows only.
    pub fn fit(&self, train_rows: &[Vec<f64>]) -> Result<FittedPreprocess, String> {
        let standardizer = match (self.expansion, self.order) {
            (Expansion::Quadratic, ExpandOrder::ExpandThenStandardize) => {
                let expanded: Result<Vec<Vec<f64>>, _> =
                    train_rows.iter().map(|r| quadratic_expand(r)).collect();
                fit_standardizer_rows(&expanded.map_err(|e| e.to_string())?)
            }
            _ => fit_standardizer_rows(train_rows),
        }
        .map_err(|e| e.to_string())?;
        Ok(FittedPreprocess {
            spec: *self,
            standardizer,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedPreprocess {
    pub spec: Preprocess,
    pub standardizer: Standardizer,
}

impl FittedPreprocess {
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>, String> {
        let out = match (self.spec.expansion, self.spec.order) {
            (Expansion::None, _) => apply_standardizer(&self.standardizer, x)
                .map_err(|e| e.to_string())?,
            (Expansion::Quadratic, ExpandOrder::StandardizeThenExpand) => {
                let std = apply_standardizer(&self.standardizer, x).map_err(|e| e.to_string())?;
                quadratic_expand(&std).map_err(|e| e.to_string())?
            }
            (Expansion::Quadratic, ExpandOrder::ExpandThenStandardize) => {
                let exp = quadratic_expand(x).map_err(|e| e.to_string())?;
                apply_standardizer(&self.standardizer, &exp).map_err(|e| e.to_string())?
            }
        };
        Ok(out)
    }
}

/// A model-training procedure usable inside cross-validation.
pub trait Trainer: Sync {
    type Model: Predictor + Send;
    fn train(
        &self,
        features: &[Vec<f64>],
        labels: &[Label],
        seed: u64,
    ) -> Result<Self::Model, String>;
    fn descriptor(&self) -> String;
}

pub trait Predictor {
    fn predict(&self, x: &[f64]) -> Label;
}

impl Predictor for SvmModel {
    fn predict(&self, x: &[f64]) -> Label {
        svm::predict(self, x).expect("dimension fixed by the CV pipeline")
    }
}

impl Predictor for ForestModel {
    fn predict(&self, x: &[f64]) -> Label {
        forest::predict_forest(self, x).expect("dimension fixed by the CV pipeline")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SvmTrainer {
    pub hyper: SvmHyperparams,
}

impl Trainer for SvmTrainer {
    type Model = SvmModel;

    fn train(
        &self,
        features: &[Vec<f64>],
        labels: &[Label],
        seed: u64,
    ) -> Result<SvmModel, String> {
        svm::train_smo(features, labels, &self.hyper, seed).map_err(|e| e.to_string())
    }

    fn descriptor(&self) -> String {
        format!("svm C={} gamma={}", self.hyper.c, self.hyper.gamma)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForestTrainer {
    pub n_trees: usize,
    pub min_leaf: usize,
}

impl Trainer for ForestTrainer {
    type Model = ForestModel;

    fn train(
        &self,
        features: &[Vec<f64>],
        labels: &[Label],
        seed: u64,
    ) -> Result<ForestModel, String> {
        let h = ForestHyperparams {
            n_trees: self.n_trees,
            min_leaf: self.min_leaf,
            seed,
        };
        forest::train_forest(features, labels, &h).map_err(|e| e.to_string())
    }

    fn descriptor(&self) -> String {
        format!("forest trees={} min_leaf={}", self.n_trees, self.min_leaf)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-fold seed derivation; keeps folds independent of execution order.
pub fn fold_seed(master: u64, fold: usize) -> u64 {
    splitmix64(master ^ splitmix64(fold as u64 + 1))
}

/// Cross-validation with per-fold artifacts exposed (standardizers, in fold
/// order) for leakage checks.
pub fn cross_validate_detailed<T: Trainer>(
    trainer: &T,
    dataset: &Dataset,
    prep: &Preprocess,
    k: usize,
    seed: u64,
    stratified: bool,
) -> Result<(EvalReport, Vec<Standardizer>), EvalError> {
    let n = dataset.instances.len();
    let labels: Vec<Label> = dataset.instances.iter().map(|i| i.label).collect();
    let folds = if stratified {
        stratified_kfold_split(&labels, k, seed)?
    } else {
        kfold_split(n, k, seed)?
    };
    let rows: Vec<Vec<f64>> = dataset
        .instances
        .iter()
        .map(|i| i.features.to_vec())
        .collect();

    let results: Result<Vec<(ConfusionCounts, Standardizer)>, EvalError> = folds
        .par_iter()
        .enumerate()
        .map(|(f, test_idx)| {
            let in_test = {
                let mut mask = vec![false; n];
                for &i in test_idx {
                    mask[i] = true;
                }
                mask
            };
            let train_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
            let train_labels: Vec<Label> = train_idx.iter().map(|&i| labels[i]).collect();
            if !train_labels.contains(&1) || !train_labels.contains(&-1) {
                return Err(EvalError::SingleClassFold { fold: f });
            }
            let train_rows: Vec<Vec<f64>> =
                train_idx.iter().map(|&i| rows[i].clone()).collect();
            let fitted = prep.fit(&train_rows).map_err(|message| EvalError::Train {
                fold: f,
                message,
            })?;
            let transform_all = |idx: &[usize]| -> Result<Vec<Vec<f64>>, EvalError> {
                idx.iter()
                    .map(|&i| {
                        fitted.transform(&rows[i]).map_err(|message| EvalError::Train {
                            fold: f,
                            message,
                        })
                    })
                    .collect()
            };
            let train_x = transform_all(&train_idx)?;
            let test_x = transform_all(test_idx)?;
            let model = trainer
                .train(&train_x, &train_labels, fold_seed(seed, f))
                .map_err(|message| EvalError::Train { fold: f, message })?;
            let predictions: Vec<Label> = test_x.iter().map(|x| model.predict(x)).collect();
            let truth: Vec<Label> = test_idx.iter().map(|&i| labels[i]).collect();
            Ok((confusion(&predictions, &truth)?, fitted.standardizer))
        })
        .collect();
    let results = results?;

    let per_fold: Vec<ConfusionCounts> = results.iter().map(|(c, _)| *c).collect();
    let standardizers: Vec<Standardizer> = results.into_iter().map(|(_, s)| s).collect();
    let mut pooled = ConfusionCounts::default();
    for c in &per_fold {
        pooled.add(c);
    }
    let m = metrics(&pooled);
    Ok((
        EvalReport {
            per_fold,
            pooled,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            model_descriptor: format!(
                "{} | expansion {:?} | k={k} seed={seed}{}",
                trainer.descriptor(),
                prep.expansion,
                if stratified { " stratified" } else { "" }
            ),
        },
        standardizers,
    ))
}

/// k-fold cross-validation: per fold, fit preprocessing on the training split,
/// train, predict the held-out fold; every instance is tested exactly once.
pub fn cross_validate<T: Trainer>(
    trainer: &T,
    dataset: &Dataset,
    prep: &Preprocess,
    k: usize,
    seed: u64,
    stratified: bool,
) -> Result<EvalReport, EvalError> {
    cross_validate_detailed(trainer, dataset, prep, k, seed, stratified).map(|(r, _)| r)
}

/// One cross-validation per C value (quadratic expansion, Gaussian kernel).
pub fn sweep_svm_c(
    dataset: &Dataset,
    c_values: &[f64],
    gamma: f64,
    k: usize,
    seed: u64,
) -> Result<SweepCurve, EvalError> {
    if c_values.windows(2).any(|w| w[1] <= w[0]) || c_values.iter().any(|&c| !(c > 0.0)) {
        return Err(EvalError::BadParamGrid(format!("{c_values:?}")));
    }
    let mut rows = Vec::with_capacity(c_values.len());
    for &c in c_values {
        let trainer = SvmTrainer {
            hyper: SvmHyperparams::new(c, gamma),
        };
        let report = cross_validate(&trainer, dataset, &Preprocess::quadratic(), k, seed, false)?;
        rows.push(SweepPoint {
            param: c,
            precision: report.precision,
            recall: report.recall,
            f1: report.f1,
        });
    }
    Ok(SweepCurve { rows })
}

/// One cross-validation per tree count.
pub fn sweep_forest_trees(
    dataset: &Dataset,
    tree_counts: &[usize],
    k: usize,
    seed: u64,
) -> Result<SweepCurve, EvalError> {
    if tree_counts.windows(2).any(|w| w[1] <= w[0]) || tree_counts.iter().any(|&t| t == 0) {
        return Err(EvalError::BadParamGrid(format!("{tree_counts:?}")));
    }
    let mut rows = Vec::with_capacity(tree_counts.len());
    for &t in tree_counts {
        let trainer = ForestTrainer {
            n_trees: t,
            min_leaf: 1,
        };
        let report = cross_validate(&trainer, dataset, &Preprocess::plain(), k, seed, false)?;
        rows.push(SweepPoint {
            param: t as f64,
            precision: report.precision,
            recall: report.recall,
            f1: report.f1,
        });
    }
    Ok(SweepCurve { rows })
}

/// Curve CSV: header `param,precision,recall,f1`, 6 decimal places, LF endings.
pub fn emit_curve_csv(curve: &SweepCurve) -> String {
    let mut out = String::from("param,precision,recall,f1\n");
    for row in &curve.rows {
        out.push_str(&format!(
            "{:.6},{:.6},{:.6},{:.6}\n",
            row.param, row.precision, row.recall, row.f1
        ));
    }
    out
}

pub fn parse_curve_csv(text: &str) -> Result<SweepCurve, EvalError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == "param,precision,recall,f1" => {}
        other => {
            return Err(EvalError::CurveParse {
                line: 1,
                msg: format!("bad header {:?}", other.map(|(_, h)| h).unwrap_or("")),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 4 {
            return Err(EvalError::CurveParse {
                line,
                msg: format!("expected 4 columns, got {}", fields.len()),
            });
        }
        let mut values = [0.0f64; 4];
        for (v, s) in values.iter_mut().zip(&fields) {
            *v = s.trim().parse().map_err(|_| EvalError::CurveParse {
                line,
                msg: format!("non-numeric field {s:?}"),
            })?;
        }
        rows.push(SweepPoint {
            param: values[0],
            precision: values[1],
            recall: values[2],
            f1: values[3],
        });
    }
    Ok(SweepCurve { rows })
}

/// Strongest single-feature threshold classifier, fitted and scored on the
/// full dataset (one feature, one cut, either orientation). Serves as the
/// triviality baseline for benchmark acceptance.
pub fn single_feature_baseline(dataset: &Dataset) -> Metrics {
    let n = dataset.instances.len();
    let positives = dataset.instances.iter().filter(|i| i.label == 1).count();
    let mut best = Metrics {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    if n == 0 {
        return best;
    }
    let dim = dataset.instances[0].features.len();
    for feature in 0..dim {
        let mut pairs: Vec<(f64, Label)> = dataset
            .instances
            .iter()
            .map(|i| (i.features[feature], i.label))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // sweep all cuts; at cut position p, "high" = pairs[p..]
        let mut pos_below = 0usize;
        for p in 0..=n {
            if p > 0 && p < n && pairs[p - 1].0 == pairs[p].0 {
                pos_below += usize::from(pairs[p].1 == 1);
                continue;
            }
            let pos_above = positives - pos_below;
            // orientation 1: predict +1 when feature is high
            let candidates = [
                (pos_above, n - p, positives), // tp, predicted_pos, actual_pos
                (pos_below, p, positives),     // orientation 2: +1 when low
            ];
            for (tp, predicted_pos, actual_pos) in candidates {
                if predicted_pos == 0 || actual_pos == 0 {
                    continue;
                }
                let precision = tp as f64 / predicted_pos as f64;
                let recall = tp as f64 / actual_pos as f64;
                if precision + recall == 0.0 {
                    continue;
                }
                let f1 = 2.0 * precision * recall / (precision + recall);
                if f1 > best.f1 {
                    best = Metrics {
                        precision,
                        recall,
                        f1,
                    };
                }
            }
            if p < n {
                pos_below += usize::from(pairs[p].1 == 1);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::Instance;

    fn inst(features: [f64; 3], label: Label) -> Instance {
        Instance {
            window_start: 0.0,
            features,
            label,
            sample_count: 1,
        }
    }

    #[test]
    fn kfold_sizes_uneven_split() {
        let folds = kfold_split(9169, 10, 1).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![916, 917, 917, 917, 917, 917, 917, 917, 917, 917]);
        // disjoint cover
        let mut all: Vec<usize> = folds.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..9169).collect::<Vec<_>>());
    }

    #[test]
    fn kfold_singletons_and_determinism() {
        let folds = kfold_split(10, 10, 3).unwrap();
        assert!(folds.iter().all(|f| f.len() == 1));
        assert_eq!(kfold_split(100, 7, 9).unwrap(), kfold_split(100, 7, 9).unwrap());
        assert!(kfold_split(5, 6, 0).is_err());
        assert!(kfold_split(5, 1, 0).is_err());
    }

    #[test]
    fn stratified_split_keeps_ratio() {
        let labels: Vec<Label> = (0..100).map(|i| if i < 30 { 1 } else { -1 }).collect();
        let folds = stratified_kfold_split(&labels, 10, 5).unwrap();
        for f in &folds {
            let pos = f.iter().filter(|&&i| labels[i] == 1).count();
            assert_eq!(pos, 3);
        }
    }

    #[test]
    fn confusion_cases() {
        let c = confusion(&[1, -1, 1], &[1, -1, 1]).unwrap();
        assert_eq!((c.true_positives, c.true_negatives), (2, 1));
        assert_eq!((c.false_positives, c.false_negatives), (0, 0));

        let c = confusion(&[1, 1, 1], &[-1, -1, -1]).unwrap();
        assert_eq!(c.false_positives, 3);
        assert_eq!(c.true_positives + c.true_negatives + c.false_negatives, 0);

        let c = confusion(&[1, -1], &[-1, 1]).unwrap();
        assert_eq!((c.false_positives, c.false_negatives), (1, 1));

        assert!(confusion(&[1], &[1, 1]).is_err());
    }

    #[test]
    fn metrics_formulas() {
        let m = metrics(&ConfusionCounts {
            true_positives: 8,
            false_positives: 2,
            true_negatives: 0,
            false_negatives: 2,
        });
        assert!((m.precision - 0.8).abs() < 1e-12);
        assert!((m.recall - 0.8).abs() < 1e-12);
        assert!((m.f1 - 0.8).abs() < 1e-12);

        let m = metrics(&ConfusionCounts {
            true_positives: 0,
            false_positives: 0,
            true_negatives: 0,
            false_negatives: 5,
        });
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    fn separated_dataset(n: usize) -> Dataset {
        // widely separated clusters: trivially fit by both models
        let instances = (0..n)
            .map(|i| {
                let noisy = i % 3 == 0;
                let wiggle = (i as f64 * 0.61).sin() * 0.3;
                if noisy {
                    inst([60.0 + wiggle, 5.0, 1.0 + wiggle], 1)
                } else {
                    inst([20.0 + wiggle, 5.0, 9.0 - wiggle], -1)
                }
            })
            .collect();
        Dataset {
            instances,
            provenance: "test".into(),
        }
    }

    #[test]
    fn cross_validate_perfect_separation() {
        let dataset = separated_dataset(60);
        let trainer = ForestTrainer {
            n_trees: 5,
            min_leaf: 1,
        };
        let report =
            cross_validate(&trainer, &dataset, &Preprocess::plain(), 5, 7, false).unwrap();
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.pooled.total(), 60);
        let summed: usize = report.per_fold.iter().map(|c| c.total()).sum();
        assert_eq!(summed, 60);
    }

    #[test]
    fn cross_validate_is_deterministic() {
        let dataset = separated_dataset(45);
        let trainer = SvmTrainer {
            hyper: SvmHyperparams::new(4.0, 1.0 / 9.0),
        };
        let a = cross_validate(&trainer, &dataset, &Preprocess::quadratic(), 5, 11, false)
            .unwrap();
        let b = cross_validate(&trainer, &dataset, &Preprocess::quadratic(), 5, 11, false)
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.f1, 1.0);
    }

    #[test]
    fn cross_validate_flags_single_class_fold() {
        // 3 positives among 9: with k=9 some training split keeps both classes,
        // but with only one positive total the training split for its fold
        // must be single-class
        let mut instances = vec![inst([1.0, 0.0, 0.0], 1)];
        for i in 0..8 {
            instances.push(inst([i as f64, 1.0, 2.0], -1));
        }
        let dataset = Dataset {
            instances,
            provenance: String::new(),
        };
        let trainer = ForestTrainer {
            n_trees: 1,
            min_leaf: 1,
        };
        let err = cross_validate(&trainer, &dataset, &Preprocess::plain(), 9, 0, false)
            .unwrap_err();
        assert!(matches!(err, EvalError::SingleClassFold { .. }));
    }

    #[test]
    fn fold_standardizers_use_training_means_only() {
        // crafted dataset where full-dataset means differ from every
        // training-split mean
        let dataset = Dataset {
            instances: (0..12)
                .map(|i| inst([i as f64 * 10.0, 0.5, 1.0], if i % 2 == 0 { 1 } else { -1 }))
                .collect(),
            provenance: String::new(),
        };
        let trainer = ForestTrainer {
            n_trees: 1,
            min_leaf: 1,
        };
        let (_, standardizers) = cross_validate_detailed(
            &trainer,
            &dataset,
            &Preprocess::plain(),
            3,
            21,
            false,
        )
        .unwrap();
        let folds = kfold_split(12, 3, 21).unwrap();
        for (f, s) in standardizers.iter().enumerate() {
            let train: Vec<f64> = (0..12)
                .filter(|i| !folds[f].contains(i))
                .map(|i| dataset.instances[i].features[0])
                .collect();
            let train_mean = train.iter().sum::<f64>() / train.len() as f64;
            assert!((s.means[0] - train_mean).abs() < 1e-9);
            let full_mean = (0..12).map(|i| i as f64 * 10.0).sum::<f64>() / 12.0;
            assert!((s.means[0] - full_mean).abs() > 1.0, "leaked full mean");
        }
    }

    #[test]
    fn sweep_shapes_and_validation() {
        let dataset = separated_dataset(40);
        let curve = sweep_forest_trees(&dataset, &[1, 3, 5], 4, 2).unwrap();
        assert_eq!(curve.rows.len(), 3);
        assert!(curve
            .rows
            .iter()
            .all(|r| (0.0..=1.0).contains(&r.f1)
                && (0.0..=1.0).contains(&r.precision)
                && (0.0..=1.0).contains(&r.recall)));
        assert_eq!(
            curve.rows.iter().map(|r| r.param).collect::<Vec<_>>(),
            vec![1.0, 3.0, 5.0]
        );
        assert!(sweep_forest_trees(&dataset, &[5, 3], 4, 2).is_err());
        assert!(sweep_svm_c(&dataset, &[1.0, 1.0], 0.1, 4, 2).is_err());
    }

    #[test]
    fn curve_csv_round_trip() {
        let curve = SweepCurve {
            rows: vec![SweepPoint {
                param: 4.0,
                precision: 0.8,
                recall: 0.9,
                f1: 0.847059,
            }],
        };
        let text = emit_curve_csv(&curve);
        assert_eq!(text, "param,precision,recall,f1\n4.000000,0.800000,0.900000,0.847059\n");
        let reparsed = parse_curve_csv(&text).unwrap();
        for (a, b) in curve.rows.iter().zip(&reparsed.rows) {
            assert!((a.param - b.param).abs() < 1e-6);
            assert!((a.f1 - b.f1).abs() < 1e-6);
        }
        assert_eq!(emit_curve_csv(&SweepCurve::default()), "param,precision,recall,f1\n");
    }

    #[test]
    fn baseline_finds_perfect_single_feature_cut() {
        let dataset = separated_dataset(30);
        let m = single_feature_baseline(&dataset);
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn baseline_handles_uninformative_features() {
        let dataset = Dataset {
            instances: (0..20)
                .map(|i| inst([5.0, 5.0, 5.0], if i % 2 == 0 { 1 } else { -1 }))
                .collect(),
            provenance: String::new(),
        };
        let m = single_feature_baseline(&dataset);
        // constant features: best it can do is predict everything positive
        assert!(m.f1 <= 2.0 / 3.0 + 1e-12);
    }
}
