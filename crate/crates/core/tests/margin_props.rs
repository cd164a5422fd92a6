mod common;

use ecoclass::margin_instance::{
    fit_knn, fit_svm_binary, fit_svm_multiclass, kernel_eval, KernelSpec, SvmParams, SUPPORT_THRESHOLD,
};
use ecoclass::Dataset;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn permuted(ds: &Dataset, order: &[usize]) -> Dataset {
    ds.subset(order)
}

fn knn_oracle(ds: &Dataset, k: usize, q: &[f64]) -> usize {
    let mut order: Vec<(f64, usize)> = ds.rows().enumerate().map(|(i, r)| (common::sq_dist(r, q), i)).collect();
    // Insertion sort keeps the lower index first among equal distances.
    for i in 1..order.len() {
        let mut j = i;
        while j > 0 && order[j].0 < order[j - 1].0 {
            order.swap(j, j - 1);
            j -= 1;
        }
    }
    let mut votes = vec![0usize; ds.n_classes()];
    for &(_, i) in order.iter().take(k) {
        votes[ds.labels()[i]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == top).unwrap()
}

proptest! {
    #[test]
    fn rbf_gram_is_positive_semidefinite(
        points in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 2..25),
        gamma in 0.01f64..5.0,
    ) {
        let spec = KernelSpec::Rbf { gamma };
        let n = points.len();
        let gram = DMatrix::from_fn(n, n, |i, j| kernel_eval(&spec, &points[i], &points[j]).unwrap());
        let min = gram.symmetric_eigen().eigenvalues.min();
        prop_assert!(min > -1e-8, "min eigenvalue {}", min);
    }

    #[test]
    fn knn_matches_exhaustive_scan(n in 2usize..50, p in 1usize..9, k in 1usize..10, seed: u64) {
        prop_assume!(k <= n);
        let ds = common::noise(n, 3.min(n), p, 2.0, seed);
        let model = fit_knn(&ds, k).unwrap();
        for q in common::noise(20, 2, p, 3.0, seed ^ 1).rows() {
            prop_assert_eq!(model.predict(q).unwrap(), knn_oracle(&ds, k, q));
        }
    }

    #[test]
    fn knn_ignores_training_order_with_distinct_distances(seed: u64, k in 1usize..8) {
        let ds = common::noise(30, 3, 3, 2.0, seed);
        let order: Vec<usize> = (0..30).rev().collect();
        let a = fit_knn(&ds, k).unwrap();
        let b = fit_knn(&permuted(&ds, &order), k).unwrap();
        for q in common::noise(25, 2, 3, 3.0, seed ^ 9).rows() {
            let mut d: Vec<f64> = ds.rows().map(|r| common::sq_dist(r, q)).collect();
            d.sort_by(f64::total_cmp);
            prop_assume!(d.windows(2).all(|w| w[1] - w[0] > 1e-12));
            prop_assert_eq!(a.predict(q).unwrap(), b.predict(q).unwrap());
        }
    }

    #[test]
    fn one_nn_has_zero_training_error(seed: u64) {
        let ds = common::noise(40, 3, 4, 1.0, seed);
        let model = fit_knn(&ds, 1).unwrap();
        for (x, &y) in ds.rows().zip(ds.labels()) {
            prop_assert_eq!(model.predict(x).unwrap(), y);
        }
    }

    #[test]
    fn svm_dual_stays_feasible(seed: u64, cost in 0.05f64..20.0, gamma in 0.05f64..2.0) {
        let ds = common::noise(30, 2, 2, 2.0, seed);
        let m = fit_svm_binary(&ds, &SvmParams { cost, kernel: Some(KernelSpec::Rbf { gamma }), ..Default::default() }).unwrap();
        prop_assert!(m.alphas.iter().all(|&a| a >= 0.0 && a <= cost));
        prop_assert!(m.equality_residual() < 1e-6);
        if m.converged {
            let rows: Vec<&[f64]> = ds.rows().collect();
            let spec = m.kernel;
            let gap = common::dual_gap(&rows, &m.targets, &m.alphas, cost, |a, b| kernel_eval(&spec, a, b).unwrap());
            prop_assert!(gap < 1e-3, "gap {}", gap);
        }
    }
}

#[test]
fn free_support_vectors_sit_on_the_margin() {
    for seed in 0..10 {
        let ds = common::blobs(20, 2, 2, 1.5, 300 + seed);
        let cost = 2.0;
        let m = fit_svm_binary(&ds, &SvmParams { cost, ..Default::default() }).unwrap();
        assert!(m.converged);
        for (i, (&a, &y)) in m.alphas.iter().zip(&m.targets).enumerate() {
            if a > SUPPORT_THRESHOLD && a < cost - SUPPORT_THRESHOLD {
                let f = m.decision_value(ds.row(i)).unwrap();
                assert!((y * f - 1.0).abs() < 1e-3 * cost, "seed {seed}: y f = {}", y * f);
            }
        }
    }
}

#[test]
fn svm_decision_is_permutation_invariant() {
    let params = SvmParams { cost: 1.0, tolerance: 1e-10, ..Default::default() };
    for seed in 0..5 {
        let ds = common::blobs(15, 2, 3, 1.0, 400 + seed);
        let n = ds.n_samples();
        let order: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        let a = fit_svm_binary(&ds, &params).unwrap();
        let b = fit_svm_binary(&permuted(&ds, &order), &params).unwrap();
        assert!(a.converged && b.converged);
        for q in common::noise(40, 2, 3, 3.0, seed).rows() {
            let (da, db) = (a.decision_value(q).unwrap(), b.decision_value(q).unwrap());
            assert!((da - db).abs() < 1e-6, "seed {seed}: {da} vs {db}");
        }
    }
}

#[test]
fn duplicating_separable_data_keeps_the_decision_function() {
    let params = SvmParams { cost: 1e3, kernel: Some(KernelSpec::Linear), tolerance: 1e-10, ..Default::default() };
    for seed in 0..5 {
        let ds = common::blobs(10, 2, 2, 6.0, 500 + seed);
        let n = ds.n_samples();
        let doubled: Vec<usize> = (0..2 * n).map(|i| i % n).collect();
        let a = fit_svm_binary(&ds, &params).unwrap();
        let b = fit_svm_binary(&ds.subset(&doubled), &params).unwrap();
        assert!(a.alphas.iter().all(|&x| x < params.cost - 1e-6), "margin is not hard");
        for q in common::noise(40, 2, 2, 8.0, seed).rows() {
            let (da, db) = (a.decision_value(q).unwrap(), b.decision_value(q).unwrap());
            assert!((da - db).abs() < 1e-6, "seed {seed}: {da} vs {db}");
        }
    }
}

#[test]
fn closed_form_two_points() {
    let ds = Dataset::new(vec![vec![1.0], vec![-1.0]], vec![0, 1], vec!["x".into()], vec!["+".into(), "-".into()]).unwrap();
    let m = fit_svm_binary(&ds, &SvmParams { cost: 1e4, kernel: Some(KernelSpec::Linear), ..Default::default() }).unwrap();
    assert!((m.alphas[0] - 0.5).abs() < 1e-9 && (m.alphas[1] - 0.5).abs() < 1e-9);
    assert_eq!(m.support_vectors.len(), 2);
    assert!(m.decision_value(&[0.0]).unwrap().abs() < 1e-6);
}

#[test]
fn separated_blobs_are_fit_with_defaults() {
    let ds = common::blobs(15, 3, 4, 5.0, 600);
    let m = fit_svm_multiclass(&ds, &SvmParams::default()).unwrap();
    assert_eq!(m.machines.len(), 3);
    for (x, &y) in ds.rows().zip(ds.labels()) {
        assert_eq!(m.predict(x).unwrap(), y);
    }
}

#[test]
fn rbf_value_at_squared_distance_eight() {
    let v = kernel_eval(&KernelSpec::Rbf { gamma: 0.125 }, &[0.0, 0.0], &[2.0, 2.0]).unwrap();
    assert!((v - (-1.0f64).exp()).abs() < 1e-15);
}
