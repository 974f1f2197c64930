//! Feature standardization and the quadratic feature expansion used by the SVM.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::telemetry::Instance;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot fit a standardizer on an empty instance list")]
    Empty,
    #[error("dimension mismatch: standardizer has {expected}, vector has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("quadratic expansion requires 3 components, got {0}")]
    BadExpansionInput(usize),
}

/// Per-feature mean/std transform fitted on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Fits per-feature sample mean and sample standard deviation (divisor n-1,
/// 0 when n = 1).
pub fn fit_standardizer(instances: &[Instance]) -> Result<Standardizer, FeatureError> {
    let rows: Vec<Vec<f64>> = instances.iter().map(|i| i.features.to_vec()).collect();
    fit_standardizer_rows(&rows)
}

/// Same as `fit_standardizer` but over plain feature rows of any dimension
/// (e.g. quadratically expanded vectors).
pub fn fit_standardizer_rows(rows: &[Vec<f64>]) -> Result<Standardizer, FeatureError> {
    if rows.is_empty() {
        return Err(FeatureError::Empty);
    }
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mut means = vec![0.0; d];
    for row in rows {
        if row.len() != d {
            return Err(FeatureError::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut stds = vec![0.0; d];
    if rows.len() > 1 {
        for row in rows {
            for j in 0..d {
                let dev = row[j] - means[j];
                stds[j] += dev * dev;
            }
        }
        for s in &mut stds {
            *s = (*s / (n - 1.0)).sqrt();
        }
    }
    Ok(Standardizer { means, stds })
}

/// Component-wise (x - mean) / std; components with std = 0 map to 0.
pub fn apply_standardizer(s: &Standardizer, x: &[f64]) -> Result<Vec<f64>, FeatureError> {
    if x.len() != s.means.len() {
        return Err(FeatureError::DimensionMismatch {
            expected: s.means.len(),
            got: x.len(),
        });
    }
    Ok(x.iter()
        .zip(s.means.iter().zip(&s.stds))
        .map(|(x, (m, sd))| if *sd == 0.0 { 0.0 } else { (x - m) / sd })
        .collect())
}

/// Maps (x1, x2, x3) to (x1, x2, x3, x1^2, x2^2, x3^2, x1x2, x1x3, x2x3).
pub fn quadratic_expand(x: &[f64]) -> Result<Vec<f64>, FeatureError> {
    let [a, b, c] = *x else {
        return Err(FeatureError::BadExpansionInput(x.len()));
    };
    Ok(vec![a, b, c, a * a, b * b, c * c, a * b, a * c, b * c])
}
