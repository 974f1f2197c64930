//! Randomized property tests for the library's structural invariants.

use proptest::prelude::*;

use nnd::analysis::mic;
use nnd::eval::{confusion, kfold_split, metrics, ConfusionCounts};
use nnd::features::{apply_standardizer, fit_standardizer_rows, quadratic_expand};
use nnd::forest::{predict_forest, train_forest, ForestHyperparams};
use nnd::svm::gaussian_kernel;
use nnd::telemetry::{aggregate_windows, emit_samples_csv, parse_samples, RawSample};

fn sample_stream() -> impl Strategy<Value = Vec<RawSample>> {
    // strictly increasing timestamps built from positive gaps
    (1usize..60, 0.1f64..500.0).prop_flat_map(|(n, t0)| {
        (
            proptest::collection::vec(0.5f64..20.0, n),
            proptest::collection::vec(0.0f64..100.0, n),
            proptest::collection::vec(0.0f64..1e7, n),
            proptest::collection::vec(0.0f64..1e7, n),
            proptest::collection::vec(0.0f64..100.0, n),
            Just(t0),
        )
    })
    .prop_map(|(gaps, cpu, bw_in, bw_out, noise, t0)| {
        let mut t = t0;
        gaps.into_iter()
            .enumerate()
            .map(|(i, gap)| {
                t += gap;
                RawSample {
                    timestamp: t,
                    cpu_util: cpu[i],
                    bw_in: bw_in[i],
                    bw_out: bw_out[i],
                    noise_cpu: noise[i],
                }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregation_conserves_samples_and_bounds_means(samples in sample_stream(),
                                                      window in 5.0f64..120.0) {
        let windows = aggregate_windows(&samples, window).unwrap();
        let total: usize = windows.iter().map(|w| w.sample_count).sum();
        prop_assert_eq!(total, samples.len());
        for w in &windows {
            for (j, get) in [
                |s: &RawSample| s.cpu_util,
                |s: &RawSample| s.bw_in,
                |s: &RawSample| s.bw_out,
            ]
            .iter()
            .enumerate()
            {
                let lo = samples.iter().map(|s| get(s)).fold(f64::INFINITY, f64::min);
                let hi = samples.iter().map(|s| get(s)).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(w.features[j] >= lo - 1e-9 && w.features[j] <= hi + 1e-9);
            }
        }
        // windows are ordered and non-overlapping
        for pair in windows.windows(2) {
            prop_assert!(pair[1].start >= pair[0].start + window - 1e-9);
        }
    }

    #[test]
    fn telemetry_round_trip_is_exact(samples in sample_stream()) {
        let text = emit_samples_csv(&samples);
        let reparsed = parse_samples(&text).unwrap();
        prop_assert_eq!(&reparsed, &samples);
        prop_assert_eq!(emit_samples_csv(&reparsed), text);
    }

    #[test]
    fn standardizer_output_is_centered(rows in proptest::collection::vec(
        proptest::collection::vec(-1e3f64..1e3, 3), 2..40)) {
        let s = fit_standardizer_rows(&rows).unwrap();
        let transformed: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| apply_standardizer(&s, r).unwrap())
            .collect();
        let n = transformed.len() as f64;
        for j in 0..3 {
            let mean: f64 = transformed.iter().map(|r| r[j]).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-6, "column {} mean {}", j, mean);
        }
    }

    #[test]
    fn quadratic_expansion_matches_formula(x in proptest::collection::vec(-50.0f64..50.0, 3)) {
        let e = quadratic_expand(&x).unwrap();
        let (a, b, c) = (x[0], x[1], x[2]);
        prop_assert_eq!(e, vec![a, b, c, a * a, b * b, c * c, a * b, a * c, b * c]);
    }

    #[test]
    fn metrics_identities(tp in 0usize..500, fp in 0usize..500,
                          tn in 0usize..500, fnn in 0usize..500) {
        let m = metrics(&ConfusionCounts {
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fnn,
        });
        prop_assert!((0.0..=1.0).contains(&m.precision));
        prop_assert!((0.0..=1.0).contains(&m.recall));
        prop_assert!((0.0..=1.0).contains(&m.f1));
        if m.precision > 0.0 && m.recall > 0.0 {
            // harmonic mean lies between min and max
            prop_assert!(m.f1 >= m.precision.min(m.recall) - 1e-12);
            prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-12);
        }
    }

    #[test]
    fn confusion_total_is_length(labels in proptest::collection::vec(
        (prop::bool::ANY, prop::bool::ANY), 1..100)) {
        let predictions: Vec<i8> = labels.iter().map(|&(p, _)| if p { 1 } else { -1 }).collect();
        let truth: Vec<i8> = labels.iter().map(|&(_, t)| if t { 1 } else { -1 }).collect();
        let c = confusion(&predictions, &truth).unwrap();
        prop_assert_eq!(c.total(), labels.len());
    }

    #[test]
    fn kernel_is_symmetric_and_bounded(u in proptest::collection::vec(-10.0f64..10.0, 1..4),
                                       gamma in 0.01f64..5.0,
                                       shift in -3.0f64..3.0) {
        let v: Vec<f64> = u.iter().map(|x| x + shift).collect();
        let kuv = gaussian_kernel(&u, &v, gamma).unwrap();
        let kvu = gaussian_kernel(&v, &u, gamma).unwrap();
        prop_assert_eq!(kuv, kvu);
        prop_assert!(kuv > 0.0 && kuv <= 1.0);
        prop_assert_eq!(gaussian_kernel(&u, &u, gamma).unwrap(), 1.0);
    }

    #[test]
    fn kfold_partitions_indices(n in 2usize..500, k in 2usize..12, seed in 0u64..1000) {
        prop_assume!(k <= n);
        let folds = kfold_split(n, k, seed).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }

    #[test]
    fn mic_symmetry_and_monotone_invariance(pairs in proptest::collection::vec(
        (-20.0f64..20.0, -20.0f64..20.0), 4..20)) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        prop_assume!(x.iter().any(|&v| v != x[0]) && y.iter().any(|&v| v != y[0]));
        let a = mic(&x, &y, 0.6).unwrap();
        let b = mic(&y, &x, 0.6).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "asymmetry {} vs {}", a, b);
        prop_assert!((0.0..=1.0).contains(&a));
        let gx: Vec<f64> = x.iter().map(|v| v * 0.25 + 100.0).collect();
        let c = mic(&gx, &y, 0.6).unwrap();
        prop_assert!((a - c).abs() <= 1e-9, "transform changed mic {} -> {}", a, c);
    }

    #[test]
    fn forest_vote_ignores_tree_order(seed in 0u64..50) {
        let features: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 7) as f64, (i % 5) as f64, ((i * 3) % 11) as f64])
            .collect();
        let labels: Vec<i8> = (0..40).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let h = ForestHyperparams::new(9, seed);
        let model = train_forest(&features, &labels, &h).unwrap();
        let mut reversed = model.clone();
        reversed.trees.reverse();
        for f in &features {
            prop_assert_eq!(
                predict_forest(&model, f).unwrap(),
                predict_forest(&reversed, f).unwrap()
            );
        }
    }
}
