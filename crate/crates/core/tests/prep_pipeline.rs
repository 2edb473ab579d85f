use approx::assert_abs_diff_eq;
use efem_core::prep::{
    average_ranks, inverse_standardize, make_windows, select_features, spearman, split_campaign, zscore_fit_apply,
    NormStats, WindowConfig,
};
use efem_core::scenario::{generate_campaign, ScenarioConfig};
use ndarray::{Array2, Axis};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Array2<f64> {
    Array2::from_shape_vec((rows, cols), values).unwrap()
}

/// Spearman correlation from the textbook `1 - 6 Σd² / (n(n² - 1))` formula,
/// valid when there are no ties.
fn spearman_no_ties(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (pos, i) in idx.into_iter().enumerate() {
            r[i] = pos as f64 + 1.0;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

fn distinct(values: Vec<f64>) -> bool {
    let mut v = values;
    v.sort_by(f64::total_cmp);
    v.windows(2).all(|w| w[0] != w[1])
}

proptest! {
    #[test]
    fn zscore_gives_zero_mean_unit_population_std(
        values in prop::collection::vec(-1e3f64..1e3, 12..60),
    ) {
        let rows = values.len() / 3;
        let x = matrix(rows, 3, values[..rows * 3].to_vec());
        prop_assume!(x.columns().into_iter().all(|c| c.iter().any(|v| *v != c[0])));
        let (z, stats) = zscore_fit_apply(x.view(), None).unwrap();
        for col in z.columns() {
            let n = col.len() as f64;
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9);
        }
        let back = inverse_standardize(z.view(), &stats).unwrap();
        for (a, b) in back.iter().zip(x.iter()) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn spearman_matches_the_rank_difference_formula(
        x in prop::collection::vec(-100f64..100.0, 3..40),
        seed in any::<u64>(),
    ) {
        prop_assume!(distinct(x.clone()));
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| (v * 0.3 + ((i as u64 ^ seed) % 97) as f64).sin())
            .collect();
        prop_assume!(distinct(y.clone()));
        let rho = spearman(&x, &y).unwrap();
        prop_assert!((rho - spearman_no_ties(&x, &y)).abs() < 1e-9);
    }

    #[test]
    fn spearman_is_invariant_under_monotone_maps(
        x in prop::collection::vec(-5f64..5.0, 3..30),
        y in prop::collection::vec(-5f64..5.0, 3..30),
    ) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        prop_assume!(x.iter().any(|v| *v != x[0]) && y.iter().any(|v| *v != y[0]));
        let expx: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let cube: Vec<f64> = y.iter().map(|v| v.powi(3)).collect();
        let a = spearman(x, y).unwrap();
        let b = spearman(&expx, &cube).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((a - spearman(y, x).unwrap()).abs() < 1e-12);
        prop_assert!((spearman(x, &expx).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_is_a_partition(n in 10usize..60, seed in any::<u64>()) {
        let split = split_campaign(n, (8, 1, 1), seed).unwrap();
        let mut all: Vec<usize> = split.train.iter().chain(&split.val).chain(&split.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(!split.val.is_empty() && !split.test.is_empty() && !split.train.is_empty());
    }
}

#[test]
fn tied_values_share_the_average_rank() {
    assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
}

#[test]
fn constant_series_has_no_correlation() {
    let err = spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err();
    assert_eq!(err.class(), "undefined-correlation");
}

#[test]
fn supplied_statistics_are_applied_verbatim() {
    let stats = NormStats {
        mu: vec![1.0, -2.0],
        sigma: vec![2.0, 0.5],
        flagged: vec![false, false],
    };
    let x = matrix(2, 2, vec![3.0, -2.0, 1.0, -1.0]);
    let (z, _) = zscore_fit_apply(x.view(), Some(&stats)).unwrap();
    assert_eq!(z, matrix(2, 2, vec![1.0, 0.0, 0.0, 2.0]));
}

#[test]
fn windows_slice_consecutive_rows_and_never_cross_scenarios() {
    let a = Array2::from_shape_fn((12, 3), |(r, c)| (r * 10 + c) as f64);
    let b = Array2::from_shape_fn((9, 3), |(r, c)| (1000 + r * 10 + c) as f64);
    let stats = NormStats {
        mu: vec![0.0; 3],
        sigma: vec![1.0; 3],
        flagged: vec![false; 3],
    };
    let cfg = WindowConfig {
        window_len: 4,
        horizon: 2,
        stride: 3,
    };
    let ds = make_windows(&[a, b], &stats, &[0, 2], &[1], cfg).unwrap();
    assert_eq!(ds.len(), cfg.count(12) + cfg.count(9));
    assert_eq!(ds.origins, vec![(0, 0), (0, 3), (0, 6), (1, 0), (1, 3)]);
    for (n, &(scenario, start)) in ds.origins.iter().enumerate() {
        let offset = if scenario == 0 { 0.0 } else { 1000.0 };
        let input = ds.inputs.index_axis(Axis(0), n);
        let target = ds.targets.index_axis(Axis(0), n);
        for t in 0..4 {
            assert_abs_diff_eq!(input[[t, 0]], offset + ((start + t) * 10) as f64);
            assert_abs_diff_eq!(input[[t, 1]], offset + ((start + t) * 10 + 2) as f64);
        }
        for h in 0..2 {
            assert_abs_diff_eq!(target[[h, 0]], offset + ((start + 4 + h) * 10 + 1) as f64);
        }
    }
}

#[test]
fn short_scenario_is_a_window_error() {
    let stats = NormStats {
        mu: vec![0.0],
        sigma: vec![1.0],
        flagged: vec![false],
    };
    let cfg = WindowConfig {
        window_len: 4,
        horizon: 4,
        stride: 1,
    };
    let err = make_windows(&[Array2::zeros((5, 1))], &stats, &[0], &[0], cfg).unwrap_err();
    assert_eq!(err.class(), "window");
}

#[test]
fn selection_ignores_monotone_rescaling() {
    let base = ScenarioConfig {
        steps_per_scenario: 120,
        n_channels: 30,
        n_targets: 6,
        ..Default::default()
    };
    let campaign = generate_campaign(&base, &[0.03, 0.08, 0.13]).unwrap();
    let targets: Vec<usize> = (0..6).collect();
    let plain = select_features(&campaign, &targets, 0.4).unwrap();
    let mut warped = campaign.clone();
    for s in &mut warped {
        for (c, mut col) in s.values.columns_mut().into_iter().enumerate() {
            match c % 3 {
                0 => col.mapv_inplace(|v| 3.0 * v + 7.0),
                1 => col.mapv_inplace(|v| v.powi(3)),
                _ => col.mapv_inplace(|v| -(v / 100.0).exp()),
            }
        }
    }
    let again = select_features(&warped, &targets, 0.4).unwrap();
    assert_eq!(plain.indices, again.indices);
    for (a, b) in plain.max_abs_rho.iter().zip(&again.max_abs_rho) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
    assert!(plain.indices.len() < 30, "distractors should be rejected");
}
