//! Soft-margin kernel SVM: Gaussian kernel, dual formulation, SMO training.
//!
//! Training solves the dual problem
//!   max_a  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//!   s.t.   sum_i y_i a_i = 0,  0 <= a_i <= C
//! by sequential minimal optimization with Platt-style pair selection: the
//! outer loop scans KKT violators, the inner choice maximizes |E_i - E_j|
//! over cached errors, with seeded randomized fallbacks. The decision
//! function is f(x) = sum_i a_i y_i K(x_i, x) + b.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::telemetry::Label;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("dimension mismatch: {expected} vs {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training requires at least one instance of each class")]
    SingleClass,
    #[error("labels must be -1 or +1, got {0}")]
    BadLabel(Label),
    #[error("features and labels have different lengths ({features} vs {labels})")]
    LengthMismatch { features: usize, labels: usize },
    #[error("non-finite feature value at instance {0}")]
    NonFinite(usize),
    #[error("invalid hyperparameter: {0}")]
    BadHyperparam(String),
    #[error("SMO failed to converge: best KKT violation {violation}")]
    Convergence {
        model: Box<SvmModel>,
        violation: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyperparams {
    /// Slack penalty C of the primal objective.
    pub c: f64,
    /// Gaussian kernel width.
    pub gamma: f64,
    /// Tolerance on the maximum KKT violation at convergence.
    pub kkt_tol: f64,
    /// Minimum meaningful alpha update; smaller steps are rejected.
    pub alpha_eps: f64,
    /// Full passes without an accepted step before declaring failure.
    pub max_passes: usize,
}

impl SvmHyperparams {
    pub fn new(c: f64, gamma: f64) -> Self {
        Self {
            c,
            gamma,
            kkt_tol: 1e-3,
            alpha_eps: 1e-12,
            max_passes: 10,
        }
    }

    fn validate(&self) -> Result<(), SvmError> {
        let positive = [
            ("c", self.c),
            ("gamma", self.gamma),
            ("kkt_tol", self.kkt_tol),
            ("alpha_eps", self.alpha_eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SvmError::BadHyperparam(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.max_passes == 0 {
            return Err(SvmError::BadHyperparam("max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

/// Default kernel width 1/d for feature dimension d.
pub fn default_gamma(dim: usize) -> f64 {
    1.0 / dim.max(1) as f64
}

/// Trained model: only vectors with a_i > 0 are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub labels: Vec<Label>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
}

/// K(u, v) = exp(-gamma * ||u - v||^2).
pub fn gaussian_kernel(u: &[f64], v: &[f64], gamma: f64) -> Result<f64, SvmError> {
    if u.len() != v.len() {
        return Err(SvmError::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-gamma * sq).exp())
}

#[inline]
fn kernel(u: &[f64], v: &[f64], gamma: f64) -> f64 {
    let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * sq).exp()
}

/// Signed decision score sum_i a_i y_i K(x_i, x) + b.
pub fn decision_value(m: &SvmModel, x: &[f64]) -> Result<f64, SvmError> {
    if let Some(sv) = m.support_vectors.first() {
        if sv.len() != x.len() {
            return Err(SvmError::DimensionMismatch {
                expected: sv.len(),
                got: x.len(),
            });
        }
    }
    let mut acc = m.bias;
    for ((sv, &a), &y) in m.support_vectors.iter().zip(&m.alphas).zip(&m.labels) {
        acc += a * y as f64 * kernel(sv, x, m.gamma);
    }
    Ok(acc)
}

/// Sign of the decision value; ties (exactly 0) predict +1 (noisy).
pub fn predict(m: &SvmModel, x: &[f64]) -> Result<Label, SvmError> {
    Ok(if decision_value(m, x)? >= 0.0 { 1 } else { -1 })
}

/// Dual objective sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j).
pub fn dual_objective(
    features: &[Vec<f64>],
    alphas: &[f64],
    labels: &[Label],
    gamma: f64,
) -> Result<f64, SvmError> {
    let n = features.len();
    if alphas.len() != n || labels.len() != n {
        return Err(SvmError::LengthMismatch {
            features: n,
            labels: labels.len().min(alphas.len()),
        });
    }
    let mut obj: f64 = alphas.iter().sum();
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        if features[i].len() != features[0].len() {
            return Err(SvmError::DimensionMismatch {
                expected: features[0].len(),
                got: features[i].len(),
            });
        }
        // diagonal: K(x,x) = 1
        obj -= 0.5 * alphas[i] * alphas[i];
        for j in (i + 1)..n {
            if alphas[j] == 0.0 {
                continue;
            }
            obj -= alphas[i]
                * alphas[j]
                * (labels[i] as f64)
                * (labels[j] as f64)
                * kernel(&features[i], &features[j], gamma);
        }
    }
    Ok(obj)
}

/// Maximum KKT residual of `m` over its training set: for a_i = 0 require
/// y_i f(x_i) >= 1, for a_i = C require y_i f(x_i) <= 1, for interior alphas
/// require y_i f(x_i) = 1. Returns the largest shortfall.
pub fn kkt_violation(m: &SvmModel, features: &[Vec<f64>], labels: &[Label]) -> f64 {
    // Recover each training point's alpha by exact feature+label lookup;
    // points absent from the SV list have alpha 0.
    let mut lookup: HashMap<(Vec<u64>, Label), Vec<f64>> = HashMap::new();
    for ((sv, &a), &y) in m.support_vectors.iter().zip(&m.alphas).zip(&m.labels) {
        let key = (sv.iter().map(|v| v.to_bits()).collect(), y);
        lookup.entry(key).or_default().push(a);
    }
    let bound_tol = 1e-9 * m.c.max(1.0);
    let mut worst: f64 = 0.0;
    for (x, &y) in features.iter().zip(labels) {
        let key: (Vec<u64>, Label) = (x.iter().map(|v| v.to_bits()).collect(), y);
        let alpha = lookup
            .get_mut(&key)
            .and_then(|v| v.pop())
            .unwrap_or(0.0);
        let yf = y as f64 * decision_value(m, x).expect("dimension checked by caller");
        let residual = if alpha <= bound_tol {
            (1.0 - yf).max(0.0)
        } else if alpha >= m.c - bound_tol {
            (yf - 1.0).max(0.0)
        } else {
            (yf - 1.0).abs()
        };
        worst = worst.max(residual);
    }
    worst
}

struct SmoState<'a> {
    x: &'a [Vec<f64>],
    y: Vec<f64>,
    alpha: Vec<f64>,
    err: Vec<f64>,
    b: f64,
    c: f64,
    gamma: f64,
    tol: f64,
    alpha_eps: f64,
}

impl SmoState<'_> {
    fn k(&self, i: usize, j: usize) -> f64 {
        kernel(&self.x[i], &self.x[j], self.gamma)
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.err[i1], self.err[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s > 0.0 {
            ((a1_old + a2_old - self.c).max(0.0), (a1_old + a2_old).min(self.c))
        } else {
            ((a2_old - a1_old).max(0.0), (self.c + a2_old - a1_old).min(self.c))
        };
        if lo >= hi {
            return false;
        }
        let k11 = self.k(i1, i1);
        let k12 = self.k(i1, i2);
        let k22 = self.k(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2 = if eta > 0.0 {
            (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // flat direction: evaluate the objective at both clipping bounds
            let f1 = y1 * (e1 + self.b) - a1_old * k11 - s * a2_old * k12;
            let f2 = y2 * (e2 + self.b) - s * a1_old * k12 - a2_old * k22;
            let l1 = a1_old + s * (a2_old - lo);
            let h1 = a1_old + s * (a2_old - hi);
            let psi_l = l1 * f1 + lo * f2
                + 0.5 * l1 * l1 * k11
                + 0.5 * lo * lo * k22
                + s * lo * l1 * k12;
            let psi_h = h1 * f1 + hi * f2
                + 0.5 * h1 * h1 * k11
                + 0.5 * hi * hi * k22
                + s * hi * h1 * k12;
            let eps = 1e-12;
            if psi_l < psi_h - eps {
                lo
            } else if psi_l > psi_h + eps {
                hi
            } else {
                return false;
            }
        };
        // snap to the box to keep bound status exact
        if a2 < 1e-10 * self.c {
            a2 = 0.0;
        } else if a2 > self.c * (1.0 - 1e-10) {
            a2 = self.c;
        }
        if (a2 - a2_old).abs() < self.alpha_eps {
            return false;
        }
        let a1 = (a1_old + s * (a2_old - a2)).clamp(0.0, self.c);

        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        let new_b = if a1 > 0.0 && a1 < self.c {
            b1
        } else if a2 > 0.0 && a2 < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = new_b - self.b;
        for k in 0..self.x.len() {
            self.err[k] +=
                d1 * self.k(i1, k) + d2 * self.k(i2, k) + db;
        }
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
        self.b = new_b;
        true
    }

    /// Returns (accepted a step, i2 violates KKT at tol).
    fn examine(&mut self, i2: usize, rng: &mut ChaCha8Rng) -> (bool, bool) {
        let r2 = self.err[i2] * self.y[i2];
        let a2 = self.alpha[i2];
        // bound tests must match kkt_violation's tolerance band, or residual
        // alphas (e.g. 1e-17) get flagged as violators no step can move
        let bound_eps = 1e-9 * self.c.max(1.0);
        let at_lower = a2 <= bound_eps;
        let at_upper = a2 >= self.c - bound_eps;
        let violating = (r2 < -self.tol && !at_upper) || (r2 > self.tol && !at_lower);
        if !violating {
            return (false, false);
        }
        let non_bound: Vec<usize> = (0..self.x.len())
            .filter(|&i| self.alpha[i] > 0.0 && self.alpha[i] < self.c)
            .collect();
        if non_bound.len() > 1 {
            let e2 = self.err[i2];
            let i1 = non_bound
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    let da = (self.err[a] - e2).abs();
                    let db = (self.err[b] - e2).abs();
                    da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            if self.take_step(i1, i2) {
                return (true, true);
            }
        }
        if !non_bound.is_empty() {
            let start = rng.gen_range(0..non_bound.len());
            for off in 0..non_bound.len() {
                let i1 = non_bound[(start + off) % non_bound.len()];
                if self.take_step(i1, i2) {
                    return (true, true);
                }
            }
        }
        let n = self.x.len();
        let start = rng.gen_range(0..n);
        for off in 0..n {
            let i1 = (start + off) % n;
            if self.take_step(i1, i2) {
                return (true, true);
            }
        }
        (false, true)
    }

    /// Re-estimates the bias from the KKT optimality interval. Pair steps
    /// never depend on b, so when every alpha sits at a box bound the
    /// incremental bias can drift outside the interval of biases consistent
    /// with the (possibly already optimal) alphas, producing phantom
    /// single-point violations. Moving b into [b_lo, b_hi] removes them; if
    /// the interval is crossed a genuinely violating pair still exists and
    /// stepping continues.
    fn recenter_bias(&mut self) {
        let bound_eps = 1e-9 * self.c.max(1.0);
        let mut b_lo = f64::NEG_INFINITY;
        let mut b_hi = f64::INFINITY;
        for i in 0..self.x.len() {
            let v = self.b - self.err[i]; // y_i - sum_j alpha_j y_j K_ij
            let (a, y) = (self.alpha[i], self.y[i]);
            let upper = (a > bound_eps && y > 0.0) || (a < self.c - bound_eps && y < 0.0);
            let lower = (a < self.c - bound_eps && y > 0.0) || (a > bound_eps && y < 0.0);
            if upper {
                b_hi = b_hi.min(v);
            }
            if lower {
                b_lo = b_lo.max(v);
            }
        }
        if b_lo > b_hi {
            return;
        }
        let new_b = match (b_lo.is_finite(), b_hi.is_finite()) {
            (true, true) => 0.5 * (b_lo + b_hi),
            (true, false) => b_lo,
            (false, true) => b_hi,
            (false, false) => return,
        };
        let db = new_b - self.b;
        if db != 0.0 {
            for e in &mut self.err {
                *e += db;
            }
            self.b = new_b;
        }
    }

    /// Recomputes the error cache from scratch, discarding incremental drift.
    fn refresh_errors(&mut self) {
        let n = self.x.len();
        for k in 0..n {
            let mut f = self.b;
            for i in 0..n {
                if self.alpha[i] != 0.0 {
                    f += self.alpha[i] * self.y[i] * self.k(i, k);
                }
            }
            self.err[k] = f - self.y[k];
        }
    }

    fn model(&self) -> SvmModel {
        let mut support_vectors = Vec::new();
        let mut alphas = Vec::new();
        let mut labels = Vec::new();
        for (i, &a) in self.alpha.iter().enumerate() {
            if a > 0.0 {
                support_vectors.push(self.x[i].clone());
                alphas.push(a);
                labels.push(if self.y[i] > 0.0 { 1 } else { -1 });
            }
        }
        SvmModel {
            support_vectors,
            alphas,
            labels,
            bias: self.b,
            gamma: self.gamma,
            c: self.c,
        }
    }
}

/// Trains a soft-margin Gaussian-kernel SVM with SMO. Deterministic given
/// (data, hyperparams, seed).
pub fn train_smo(
    features: &[Vec<f64>],
    labels: &[Label],
    h: &SvmHyperparams,
    seed: u64,
) -> Result<SvmModel, SvmError> {
    h.validate()?;
    let n = features.len();
    if labels.len() != n {
        return Err(SvmError::LengthMismatch {
            features: n,
            labels: labels.len(),
        });
    }
    let mut seen = (false, false);
    for &l in labels {
        match l {
            1 => seen.0 = true,
            -1 => seen.1 = true,
            other => return Err(SvmError::BadLabel(other)),
        }
    }
    if !(seen.0 && seen.1) {
        return Err(SvmError::SingleClass);
    }
    let dim = features[0].len();
    for (i, x) in features.iter().enumerate() {
        if x.len() != dim {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFinite(i));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let mut state = SmoState {
        x: features,
        err: y.iter().map(|&v| -v).collect(), // f = 0 initially
        y,
        alpha: vec![0.0; n],
        b: 0.0,
        c: h.c,
        gamma: h.gamma,
        tol: h.kkt_tol,
        alpha_eps: h.alpha_eps,
    };

    let mut examine_all = true;
    let mut stuck_passes = 0usize;
    let hard_cap = 100_000usize;
    for _ in 0..hard_cap {
        let mut changed = 0usize;
        let mut violators = 0usize;
        for i in 0..n {
            if !examine_all && !(state.alpha[i] > 0.0 && state.alpha[i] < state.c) {
                continue;
            }
            let (stepped, violated) = state.examine(i, &mut rng);
            changed += stepped as usize;
            violators += violated as usize;
        }
        if examine_all && violators == 0 {
            let model = state.model();
            if kkt_violation(&model, features, labels) <= h.kkt_tol {
                return Ok(model);
            }
            // the all-clear came from a drifted error cache; rebuild and retry
            state.refresh_errors();
            state.recenter_bias();
            stuck_passes += 1;
            if stuck_passes >= h.max_passes {
                break;
            }
            continue;
        }
        if changed == 0 {
            if examine_all {
                state.refresh_errors();
                state.recenter_bias();
                stuck_passes += 1;
                if stuck_passes >= h.max_passes {
                    break;
                }
            }
            examine_all = true;
        } else {
            stuck_passes = 0;
            examine_all = !examine_all;
        }
    }
    let model = state.model();
    let violation = kkt_violation(&model, features, labels);
    Err(SvmError::Convergence {
        model: Box::new(model),
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_identity_and_values() {
        let u = vec![1.0, 2.0, 3.0];
        assert_eq!(gaussian_kernel(&u, &u, 2.5).unwrap(), 1.0);
        // ||u - v||^2 = 1
        let v = vec![1.0, 2.0, 4.0];
        assert!((gaussian_kernel(&u, &v, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(gaussian_kernel(&u, &v, 0.0).unwrap(), 1.0);
        assert!(gaussian_kernel(&u, &[1.0], 1.0).is_err());
    }

    #[test]
    fn mirror_symmetric_pair() {
        let x = vec![vec![-1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
        let y = vec![-1, 1];
        let m = train_smo(&x, &y, &SvmHyperparams::new(5.0, 1.0), 0).unwrap();
        assert_eq!(m.alphas.len(), 2);
        assert!((m.alphas[0] - m.alphas[1]).abs() < 1e-9);
        assert!(m.bias.abs() < 1e-9);
        // midpoint of the two points scores 0
        assert!(decision_value(&m, &[0.0, 0.0, 0.0]).unwrap().abs() < 1e-9);
        assert_eq!(predict(&m, &[0.9, 0.0, 0.0]).unwrap(), 1);
        assert_eq!(predict(&m, &[-0.9, 0.0, 0.0]).unwrap(), -1);
    }

    #[test]
    fn xor_is_separated_by_gaussian_kernel() {
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ];
        let y = vec![1, 1, -1, -1];
        let h = SvmHyperparams::new(10.0, 1.0);
        let m = train_smo(&x, &y, &h, 0).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            assert_eq!(predict(&m, xi).unwrap(), yi);
        }
        // box constraint and dual equality
        let sum_ay: f64 = m
            .alphas
            .iter()
            .zip(&m.labels)
            .map(|(a, &l)| a * l as f64)
            .sum();
        assert!(sum_ay.abs() <= 1e-6);
        for &a in &m.alphas {
            assert!(a > 0.0 && a <= h.c);
        }
        assert!(kkt_violation(&m, &x, &y) <= h.kkt_tol);
    }

    #[test]
    fn rejects_single_class() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train_smo(&x, &[1, 1], &SvmHyperparams::new(1.0, 1.0), 0),
            Err(SvmError::SingleClass)
        ));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let t = i as f64 * 0.37;
            x.push(vec![t.sin(), t.cos(), (t * 1.7).sin()]);
            y.push(if (t * 0.9).sin() > 0.0 { 1 } else { -1 });
        }
        let h = SvmHyperparams::new(3.0, 0.8);
        let m1 = train_smo(&x, &y, &h, 99).unwrap();
        let m2 = train_smo(&x, &y, &h, 99).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn dual_objective_cases() {
        let x = vec![vec![1.0, 0.0]];
        let y = vec![1];
        assert_eq!(dual_objective(&x, &[0.0], &y, 1.0).unwrap(), 0.0);
        let a = 0.7;
        assert!((dual_objective(&x, &[a], &y, 1.0).unwrap() - (a - a * a / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn smo_objective_improves_over_zero() {
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ];
        let y = vec![1, 1, -1, -1];
        let m = train_smo(&x, &y, &SvmHyperparams::new(10.0, 1.0), 0).unwrap();
        // reconstruct the full alpha vector (all four points are SVs here or not;
        // map by lookup through kkt machinery is overkill, recompute directly)
        let obj = dual_objective(&m.support_vectors, &m.alphas, &m.labels, m.gamma).unwrap();
        assert!(obj > 0.0);
    }

    #[test]
    fn degenerate_model_decision_is_bias() {
        let m = SvmModel {
            support_vectors: vec![],
            alphas: vec![],
            labels: vec![],
            bias: 0.3,
            gamma: 1.0,
            c: 1.0,
        };
        assert_eq!(decision_value(&m, &[1.0, 2.0]).unwrap(), 0.3);
        assert_eq!(predict(&m, &[1.0, 2.0]).unwrap(), 1);
    }

    #[test]
    fn kkt_violation_of_hand_built_models() {
        // all-zero alpha model: f(x) = 0 everywhere, so every point violates
        // y f >= 1 by exactly 1
        let m = SvmModel {
            support_vectors: vec![],
            alphas: vec![],
            labels: vec![],
            bias: 0.0,
            gamma: 1.0,
            c: 2.0,
        };
        let x = vec![vec![0.0], vec![3.0]];
        let y = vec![1, -1];
        assert!((kkt_violation(&m, &x, &y) - 1.0).abs() < 1e-12);

        // alpha at C with y f(x) far above 1
        let m = SvmModel {
            support_vectors: vec![vec![0.0]],
            alphas: vec![2.0],
            labels: vec![1],
            bias: 1.5 - 2.0, // y f(x_sv) = 2*1 + b = 1.5
            gamma: 1.0,
            c: 2.0,
        };
        let v = kkt_violation(&m, &[vec![0.0]], &[1]);
        assert!(v >= 0.5 - 1e-12, "violation {v}");
    }

    #[test]
    fn interior_svs_sit_on_margin() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..14 {
            let t = i as f64;
            let side = if i % 2 == 0 { 1.0 } else { -1.0 };
            x.push(vec![side * (1.0 + 0.1 * t), (0.31 * t).sin()]);
            y.push(if side > 0.0 { 1 } else { -1 });
        }
        let h = SvmHyperparams::new(4.0, 0.5);
        let m = train_smo(&x, &y, &h, 5).unwrap();
        for ((sv, &a), &l) in m.support_vectors.iter().zip(&m.alphas).zip(&m.labels) {
            if a > 1e-8 && a < h.c - 1e-8 {
                let yf = l as f64 * decision_value(&m, sv).unwrap();
                assert!((yf - 1.0).abs() <= h.kkt_tol, "interior SV off margin: {yf}");
            }
        }
    }
}
