use ndarray::Array2;
use proptest::prelude::*;

use pgm_forecast::forecast::ForecastSet;
use pgm_forecast::forest::{fit_classifier, HyperParams};
use pgm_forecast::hurdle::{compose, compose_quasi_hurdle, CompositionStrategy};
use pgm_forecast::panel::{generate_synthetic, SyntheticConfig};
use pgm_forecast::scoring::{average_ranks, crps_sample, empirical_quantile, interval_score, mis_sample};
use pgm_forecast::simulation::build_predictions;
use pgm_forecast::spatial::dbscan;
use pgm_forecast::tuning::{average_precision, make_cv_splits, tune_score};
use pgm_forecast::MonthId;

fn counts() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(prop_oneof![3 => Just(0u32), 1 => 1u32..200], 1..300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn crps_is_order_free_and_nonnegative(mut s in counts(), y in 0u32..300) {
        let a = crps_sample(&s, y as f64).unwrap();
        s.reverse();
        let b = crps_sample(&s, y as f64).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn crps_is_bounded_by_mean_absolute_error(s in counts(), y in 0u32..300) {
        let mae = s.iter().map(|&x| (x as f64 - y as f64).abs()).sum::<f64>() / s.len() as f64;
        let crps = crps_sample(&s, y as f64).unwrap();
        prop_assert!(crps <= mae + 1e-9);
    }

    #[test]
    fn crps_of_point_mass_is_absolute_error(c in 0u32..500, m in 1usize..200, y in 0u32..500) {
        let crps = crps_sample(&vec![c; m], y as f64).unwrap();
        prop_assert!((crps - (c as f64 - y as f64).abs()).abs() < 1e-9);
    }

    #[test]
    fn quasi_hurdle_keeps_size_and_zero_count(
        values in prop::collection::vec(1u32..1000, 1000),
        p in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let out = compose_quasi_hurdle(p, &values, seed).unwrap();
        prop_assert_eq!(out.len(), 1000);
        prop_assert!(out.windows(2).all(|w| w[0] <= w[1]));
        let nonzero = out.iter().filter(|&&v| v > 0).count();
        let expected = (1000.0 * p + 0.5).floor() as usize;
        prop_assert_eq!(nonzero, expected);
    }

    #[test]
    fn multiplicative_composition_never_exceeds_input(
        values in prop::collection::vec(1u32..1000, 1..200),
        p in 0.0f64..=1.0,
    ) {
        let out = compose(CompositionStrategy::Multiplicative, p, &values, 0).unwrap();
        let max_in = *values.iter().max().unwrap();
        prop_assert!(out.iter().all(|&v| v <= max_in));
    }

    #[test]
    fn ranks_sum_to_triangle_number(values in prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..5.0], 1..12)) {
        let r = average_ranks(&values);
        let n = values.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
        for i in 0..values.len() {
            for j in 0..values.len() {
                if values[i] < values[j] {
                    prop_assert!(r[i] < r[j]);
                }
                if values[i] == values[j] {
                    prop_assert_eq!(r[i], r[j]);
                }
            }
        }
    }

    #[test]
    fn tune_score_never_exceeds_mean_test(folds in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..8)) {
        let test = folds.iter().map(|f| f.1).sum::<f64>() / folds.len() as f64;
        prop_assert!(tune_score(&folds).unwrap() <= test + 1e-12);
    }

    #[test]
    fn interval_score_at_least_width(l in 0.0f64..50.0, w in 0.0f64..50.0, y in 0.0f64..120.0, alpha in 0.01f64..0.99) {
        prop_assert!(interval_score(l, l + w, y, alpha) >= w - 1e-12);
    }

    #[test]
    fn mis_of_point_mass(c in 0u32..100, y in 0u32..100) {
        let s = mis_sample(&[c; 50], y as f64, 0.1).unwrap();
        let expected = 2.0 / 0.1 * (c as f64 - y as f64).abs();
        prop_assert!((s - expected).abs() < 1e-9);
    }

    #[test]
    fn empirical_quantile_is_monotone(mut s in prop::collection::vec(0.0f64..100.0, 1..100), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        s.sort_by(f64::total_cmp);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(empirical_quantile(&s, lo) <= empirical_quantile(&s, hi));
    }

    #[test]
    fn average_precision_in_unit_interval(
        data in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..100)
    ) {
        let (scores, labels): (Vec<f64>, Vec<bool>) = data.into_iter().unzip();
        prop_assume!(labels.iter().any(|&l| l));
        let ap = average_precision(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&ap));
    }

    #[test]
    fn simulated_predictions_replace_exact_count(
        actuals in prop::collection::vec(1u32..100, 1..60),
        zeros in 0usize..200,
        tenth in 1u32..=10,
        seed in any::<u64>(),
    ) {
        let n = actuals.len();
        let mut all = vec![0u32; zeros];
        all.extend(&actuals);
        let alpha = tenth as f64 / 10.0;
        let preds = build_predictions(&all, alpha, 0.0, 50.0, seed).unwrap();
        prop_assert_eq!(preds.len(), all.len());
        // replaced predictions are all-zero; kept ones are Poisson(y ≥ 1) draws
        let replaced = preds[zeros..].iter().filter(|p| p.iter().all(|&v| v == 0)).count();
        let expected = ((1.0 - alpha) * n as f64 + 0.5).floor() as usize;
        prop_assert_eq!(replaced, expected);
        prop_assert!(preds[..zeros].iter().all(|p| p.iter().all(|&v| v == 0)));
    }

    #[test]
    fn dbscan_ignores_point_order(points in prop::collection::vec((0i32..15, 0i32..15), 1..60), min_pts in 1usize..5) {
        let pts: Vec<(f64, f64)> = points.iter().map(|&(a, b)| (a as f64, b as f64)).collect();
        let mut rev = pts.clone();
        rev.reverse();
        let a = dbscan(&pts, 1.5, min_pts);
        let b = dbscan(&rev, 1.5, min_pts);
        let n = pts.len();
        // same co-membership relation and the same core/noise split
        for i in 0..n {
            prop_assert_eq!(a[i].is_none(), b[n - 1 - i].is_none());
            for j in 0..n {
                if a[i].is_some() && a[j].is_some() && a[i] == a[j] {
                    // border points may attach to either neighbouring cluster,
                    // so only core-to-core links are compared
                    let core = |k: usize| pts.iter().filter(|q| (q.0 - pts[k].0).hypot(q.1 - pts[k].1) <= 1.5).count() >= min_pts;
                    if core(i) && core(j) {
                        prop_assert_eq!(b[n - 1 - i], b[n - 1 - j]);
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cv_splits_respect_cutoff(k in 3u32..=14, folds in 1usize..6, cutoff in 90i32..=119) {
        let data = generate_synthetic(&SyntheticConfig { n_cells: 16, n_months: 120, target_nonzero_share: 0.05, ..Default::default() }).unwrap();
        let splits = match make_cv_splits(&data, k, cutoff, folds, 12) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        prop_assert_eq!(splits.len(), folds);
        for s in &splits {
            prop_assert_eq!(s.train_months.end() - s.train_months.start() + 1, 60);
            prop_assert_eq!(*s.test_months.start(), s.train_months.end() + 1);
            prop_assert!(*s.test_months.end() <= cutoff - k as MonthId);
            prop_assert!(*s.test_label_months().end() <= cutoff);
            prop_assert!(*s.train_months.start() >= data.first_month());
        }
        prop_assert!(splits.windows(2).all(|w| w[0].train_months.start() <= w[1].train_months.start()));
    }

    #[test]
    fn classifier_probabilities_in_unit_interval(seed in any::<u64>(), n in 20usize..120) {
        let mut x = Array2::zeros((n, 3));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let v = ((i as u64).wrapping_mul(2654435761) ^ seed) % 1000;
            x[[i, 0]] = v as f64;
            x[[i, 1]] = (i % 7) as f64;
            x[[i, 2]] = 1.0;
            y.push(v > 600 || i == 0);
        }
        y[1] = false;
        let hp = HyperParams { n_trees: 10, max_depth: None, min_samples_leaf: 1, max_features: 0.7, class_weight_positive: 3.0, seed };
        let model = fit_classifier(x.view(), &y, &hp).unwrap();
        let p = model.predict_proba(x.view()).unwrap();
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn forecast_csv_round_trip(flat in prop::collection::vec(0u32..50, 12 * 9)) {
        let mut fc = ForecastSet::new(30);
        for (i, s) in flat.chunks(9).enumerate() {
            fc.insert(7, 30 + i as MonthId, s.to_vec()).unwrap();
        }
        let mut buf = Vec::new();
        fc.write_csv(&mut buf).unwrap();
        let back = ForecastSet::read_csv(buf.as_slice(), 30).unwrap();
        prop_assert_eq!(back, fc);
    }
}
