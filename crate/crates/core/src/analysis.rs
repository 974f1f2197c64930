//! Per-feature dependence statistics against the noise signal: Pearson
//! correlation and the maximal information coefficient (MIC).
//!
//! MIC searches grids (a x b) with a*b <= B(n) = max(floor(n^0.6), 4) and
//! a, b >= 2, maximizing the mutual information of the induced discrete joint
//! distribution, normalized by log2(min(a, b)). Cut points fall only between
//! distinct values, so the statistic depends on orderings alone. When the
//! total number of grid placements is small the search is exhaustive; for
//! larger inputs one axis is mass-equipartitioned and the other axis's cuts
//! are optimized by dynamic programming over clump boundaries, trying both
//! orientations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::telemetry::Window;

/// Default exponent of the MIC grid budget B(n) = floor(n^0.6).
pub const DEFAULT_MIC_EXPONENT: f64 = 0.6;

/// Exhaustive grid enumeration is used while the number of candidate grids
/// stays below this budget.
const EXACT_GRID_BUDGET: u128 = 2_000_000;

/// Candidate-cut superset size for the DP approximation, per axis bin.
const CLUMP_FACTOR: usize = 5;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("series have different lengths ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least {min} points, got {n}")]
    TooShort { n: usize, min: usize },
    #[error("correlation undefined: {0} series is constant")]
    ConstantSeries(&'static str),
    #[error("non-finite value in input series")]
    NonFinite,
    #[error("no windows to analyze")]
    EmptyWindows,
}

/// Which signal the features are measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReportTarget {
    /// The noise VMs' mean CPU (raw, continuous).
    NoiseCpu,
    /// The binary label induced by a noise threshold.
    BinaryLabel { threshold: f64 },
}

/// Table-1-shaped report: rows {correlation, MIC} x columns {CPU, BW in, BW out}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub correlations: [f64; 3],
    pub mics: [f64; 3],
    pub n: usize,
    pub target: String,
}

/// Standard Pearson r = cov(x, y) / (sigma_x sigma_y), sample moments.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 2 {
        return Err(AnalysisError::TooShort { n: x.len(), min: 2 });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return Err(AnalysisError::ConstantSeries("x"));
    }
    if syy == 0.0 {
        return Err(AnalysisError::ConstantSeries("y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Group boundaries of a series in sorted order: positions (in 1..n-1 of the
/// sort permutation) where the value changes; cut points may only be placed
/// there. Returns (sorted point order, boundary positions).
fn sorted_boundaries(v: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut boundaries = Vec::new();
    for pos in 1..order.len() {
        if v[order[pos - 1]] != v[order[pos]] {
            boundaries.push(pos);
        }
    }
    (order, boundaries)
}

fn log2(v: f64) -> f64 {
    v.ln() / std::f64::consts::LN_2
}

/// Mutual information (bits) of a joint count table.
fn mutual_information(counts: &[Vec<usize>], n: usize) -> f64 {
    let rows = counts.len();
    let cols = counts[0].len();
    let mut row_sums = vec![0usize; rows];
    let mut col_sums = vec![0usize; cols];
    for (r, row) in counts.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            row_sums[r] += v;
            col_sums[c] += v;
        }
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for (r, row) in counts.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if v > 0 {
                let p = v as f64 / nf;
                mi += p * log2(p * nf * nf / (row_sums[r] as f64 * col_sums[c] as f64));
            }
        }
    }
    mi.max(0.0)
}

/// Bin assignment per point from cut positions within a sort order.
fn assign_bins(order: &[usize], cuts: &[usize], n: usize) -> Vec<usize> {
    let mut bins = vec![0usize; n];
    let mut bin = 0usize;
    let mut next_cut = 0usize;
    for (pos, &pt) in order.iter().enumerate() {
        while next_cut < cuts.len() && pos >= cuts[next_cut] {
            bin += 1;
            next_cut += 1;
        }
        bins[pt] = bin;
    }
    bins
}

fn for_each_combination(
    m: usize,
    k: usize,
    f: &mut impl FnMut(&[usize]),
) {
    fn rec(start: usize, m: usize, k: usize, chosen: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if chosen.len() == k {
            f(chosen);
            return;
        }
        let remaining = k - chosen.len();
        for i in start..=m.saturating_sub(remaining) {
            chosen.push(i);
            rec(i + 1, m, k, chosen, f);
            chosen.pop();
        }
    }
    let mut chosen = Vec::with_capacity(k);
    rec(0, m, k, &mut chosen, f);
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc > u128::MAX / 2 {
            return u128::MAX;
        }
    }
    acc
}

/// Grid budget B(n); the floor of n^exponent, clamped so the minimal 2x2
/// grid is always admissible.
fn grid_budget(n: usize, b_exponent: f64) -> usize {
    ((n as f64).powf(b_exponent).floor() as usize).max(4)
}

fn exact_cost(bx: usize, by: usize, budget: usize) -> u128 {
    let mut total: u128 = 0;
    for a in 2..=budget / 2 {
        for b in 2..=budget / a {
            total = total.saturating_add(
                binomial(bx, a - 1).saturating_mul(binomial(by, b - 1)),
            );
        }
    }
    total
}

/// Exhaustive maximization over all admissible grids.
fn mic_exact(x: &[f64], y: &[f64], budget: usize) -> f64 {
    let n = x.len();
    let (x_order, x_bounds) = sorted_boundaries(x);
    let (y_order, y_bounds) = sorted_boundaries(y);
    let mut best = 0.0f64;
    for a in 2..=budget / 2 {
        if a - 1 > x_bounds.len() {
            break;
        }
        for b in 2..=budget / a {
            if b - 1 > y_bounds.len() {
                break;
            }
            let norm = log2(a.min(b) as f64);
            for_each_combination(x_bounds.len(), a - 1, &mut |xc| {
                let x_cuts: Vec<usize> = xc.iter().map(|&i| x_bounds[i]).collect();
                let x_bins = assign_bins(&x_order, &x_cuts, n);
                for_each_combination(y_bounds.len(), b - 1, &mut |yc| {
                    let y_cuts: Vec<usize> = yc.iter().map(|&i| y_bounds[i]).collect();
                    let y_bins = assign_bins(&y_order, &y_cuts, n);
                    let mut counts = vec![vec![0usize; b]; a];
                    for i in 0..n {
                        counts[x_bins[i]][y_bins[i]] += 1;
                    }
                    let v = mutual_information(&counts, n) / norm;
                    if v > best {
                        best = v;
                    }
                });
            });
        }
    }
    best.min(1.0)
}

/// Mass-equipartition of a sort order into at most `bins` bins; tied values
/// share a bin. Returns per-point bin indices and the number of bins used.
fn equipartition(order: &[usize], boundaries: &[usize], bins: usize, n: usize) -> Vec<usize> {
    // choose cut positions closest to the ideal i*n/bins marks, among legal
    // boundaries, left to right
    let mut cuts: Vec<usize> = Vec::new();
    let mut b_iter = boundaries.iter().copied().peekable();
    for i in 1..bins {
        let ideal = (i * n) as f64 / bins as f64;
        let mut chosen: Option<usize> = None;
        while let Some(&bd) = b_iter.peek() {
            match chosen {
                Some(c) if (bd as f64 - ideal).abs() >= (c as f64 - ideal).abs() => break,
                _ => {
                    chosen = Some(bd);
                    b_iter.next();
                }
            }
        }
        if let Some(c) = chosen {
            cuts.push(c);
        }
    }
    assign_bins(order, &cuts, n)
}

/// DP over candidate cut positions: for a fixed partition of the other axis
/// (`other_bins`, `n_other`), returns the maximum MI for every number of bins
/// 2..=max_bins on this axis.
fn optimize_axis(
    order: &[usize],
    boundaries: &[usize],
    other_bins: &[usize],
    n_other: usize,
    max_bins: usize,
) -> Vec<f64> {
    let n = order.len();
    // candidate positions: clump boundaries, thinned to CLUMP_FACTOR * max_bins
    let cap = CLUMP_FACTOR * max_bins;
    let candidates: Vec<usize> = if boundaries.len() <= cap {
        boundaries.to_vec()
    } else {
        (1..=cap)
            .map(|i| {
                let ideal = (i * n) as f64 / (cap + 1) as f64;
                *boundaries
                    .iter()
                    .min_by(|&&a, &&b| {
                        (a as f64 - ideal)
                            .abs()
                            .partial_cmp(&(b as f64 - ideal).abs())
                            .unwrap()
                    })
                    .unwrap()
            })
            .collect::<std::collections::BTreeSet<usize>>()
            .into_iter()
            .collect()
    };
    // prefix counts of the other axis's bins along this axis's sort order
    let mut marks: Vec<usize> = Vec::with_capacity(candidates.len() + 2);
    marks.push(0);
    marks.extend(candidates.iter().copied());
    marks.push(n);
    let m = marks.len();
    let mut prefix = vec![vec![0usize; n_other]; m];
    {
        let mut acc = vec![0usize; n_other];
        let mut next_mark = 1usize;
        for (pos, &pt) in order.iter().enumerate() {
            while next_mark < m && marks[next_mark] == pos {
                prefix[next_mark] = acc.clone();
                next_mark += 1;
            }
            acc[other_bins[pt]] += 1;
        }
        while next_mark < m {
            prefix[next_mark] = acc.clone();
            next_mark += 1;
        }
    }
    let nf = n as f64;
    // segment value: (count/n) * sum_y q log2 q  (negative conditional entropy)
    let seg_val = |i: usize, j: usize| -> f64 {
        let total = (marks[j] - marks[i]) as f64;
        if total == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for yb in 0..n_other {
            let c = prefix[j][yb] - prefix[i][yb];
            if c > 0 {
                let q = c as f64 / total;
                acc += q * log2(q);
            }
        }
        (total / nf) * acc
    };
    // H(Y) over the other axis's bins
    let mut h_other = 0.0;
    for yb in 0..n_other {
        let c = prefix[m - 1][yb];
        if c > 0 {
            let p = c as f64 / nf;
            h_other -= p * log2(p);
        }
    }
    // dp[j][t]: best sum of segment values covering marks[0..j] with t bins
    let neg_inf = f64::NEG_INFINITY;
    let max_t = max_bins.min(m - 1);
    let mut dp = vec![vec![neg_inf; max_t + 1]; m];
    for j in 1..m {
        dp[j][1] = seg_val(0, j);
    }
    for t in 2..=max_t {
        for j in t..m {
            let mut best = neg_inf;
            for i in (t - 1)..j {
                let v = dp[i][t - 1] + seg_val(i, j);
                if v > best {
                    best = v;
                }
            }
            dp[j][t] = best;
        }
    }
    let mut out = vec![0.0; max_bins + 1];
    for t in 2..=max_t {
        let v = h_other + dp[m - 1][t];
        out[t] = v.max(0.0);
    }
    out
}

fn mic_approx(x: &[f64], y: &[f64], budget: usize) -> f64 {
    let (x_order, x_bounds) = sorted_boundaries(x);
    let (y_order, y_bounds) = sorted_boundaries(y);
    let n = x.len();
    let mut best = 0.0f64;
    let mut run = |axis1: (&[usize], &[usize]), axis2: (&[usize], &[usize])| {
        for b in 2..=budget / 2 {
            let max_a = budget / b;
            if max_a < 2 {
                break;
            }
            let bins2 = equipartition(axis2.0, axis2.1, b, n);
            let n_bins2 = bins2.iter().max().map_or(1, |&m| m + 1);
            let mi_per_a = optimize_axis(axis1.0, axis1.1, &bins2, n_bins2, max_a);
            for (a, &mi) in mi_per_a.iter().enumerate().skip(2) {
                let v = mi / log2(a.min(b) as f64);
                if v > best {
                    best = v;
                }
            }
        }
    };
    run((&x_order, &x_bounds), (&y_order, &y_bounds));
    run((&y_order, &y_bounds), (&x_order, &x_bounds));
    best.min(1.0)
}

/// Maximal information coefficient in [0, 1].
pub fn mic(x: &[f64], y: &[f64], b_exponent: f64) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch { x: x.len(), y: y.len() });
    }
    let n = x.len();
    if n < 4 {
        return Err(AnalysisError::TooShort { n, min: 4 });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Ok(0.0);
    }
    let budget = grid_budget(n, b_exponent);
    let (_, xb) = sorted_boundaries(x);
    let (_, yb) = sorted_boundaries(y);
    if exact_cost(xb.len(), yb.len(), budget) <= EXACT_GRID_BUDGET {
        Ok(mic_exact(x, y, budget))
    } else {
        Ok(mic_approx(x, y, budget))
    }
}

/// Computes both statistics for each feature (CPU, BW in, BW out) against
/// the chosen target.
pub fn feature_noise_report(
    windows: &[Window],
    target: ReportTarget,
) -> Result<DependenceReport, AnalysisError> {
    if windows.is_empty() {
        return Err(AnalysisError::EmptyWindows);
    }
    let (target_series, target_name): (Vec<f64>, String) = match target {
        ReportTarget::NoiseCpu => (
            windows.iter().map(|w| w.mean_noise_cpu).collect(),
            "noise-cpu".to_string(),
        ),
        ReportTarget::BinaryLabel { threshold } => (
            windows
                .iter()
                .map(|w| if w.mean_noise_cpu >= threshold { 1.0 } else { -1.0 })
                .collect(),
            format!("binary-label(threshold={threshold})"),
        ),
    };
    let mut correlations = [0.0; 3];
    let mut mics = [0.0; 3];
    for j in 0..3 {
        let series: Vec<f64> = windows.iter().map(|w| w.features[j]).collect();
        correlations[j] = pearson_correlation(&series, &target_series)?;
        mics[j] = mic(&series, &target_series, DEFAULT_MIC_EXPONENT)?;
    }
    Ok(DependenceReport {
        correlations,
        mics,
        n: windows.len(),
        target: target_name,
    })
}

/// CSV rendering: `stat,cpu,bw_in,bw_out`.
pub fn emit_report_csv(r: &DependenceReport) -> String {
    format!(
        "stat,cpu,bw_in,bw_out\ncorrelation,{:.6},{:.6},{:.6}\nmic,{:.6},{:.6},{:.6}\n",
        r.correlations[0],
        r.correlations[1],
        r.correlations[2],
        r.mics[0],
        r.mics[1],
        r.mics[2]
    )
}

/// Aligned plain-text table for terminals.
pub fn render_report_table(r: &DependenceReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Dependence vs {} over {} windows\n",
        r.target, r.n
    ));
    out.push_str(&format!(
        "{:<12} {:>10} {:>10} {:>10}\n",
        "stat", "CPU", "BW in", "BW out"
    ));
    out.push_str(&format!(
        "{:<12} {:>10.4} {:>10.4} {:>10.4}\n",
        "correlation", r.correlations[0], r.correlations[1], r.correlations[2]
    ));
    out.push_str(&format!(
        "{:<12} {:>10.4} {:>10.4} {:>10.4}\n",
        "MIC", r.mics[0], r.mics[1], r.mics[2]
    ));
    out
}
