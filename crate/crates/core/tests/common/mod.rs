#![allow(dead_code)]

use ecoclass::Dataset;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Gaussian blobs: class `k` is centered at `k * separation` on every axis.
pub fn blobs(n_per_class: usize, n_classes: usize, p: usize, separation: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for k in 0..n_classes {
        for _ in 0..n_per_class {
            let row: Vec<f64> = (0..p)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut r);
                    k as f64 * separation + z
                })
                .collect();
            rows.push(row);
            labels.push(k);
        }
    }
    Dataset::new(rows, labels, names("x", p), names("c", n_classes)).unwrap()
}

/// Uniform points in [-scale, scale]^p with uniformly drawn labels (every
/// class present at least once).
pub fn noise(n: usize, n_classes: usize, p: usize, scale: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| r.random_range(-scale..scale)).collect()).collect();
    let labels: Vec<usize> = (0..n).map(|i| if i < n_classes { i } else { r.random_range(0..n_classes) }).collect();
    Dataset::new(rows, labels, names("x", p), names("c", n_classes)).unwrap()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// ||a - n|| / max(||a||, ||n||), zero when both vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n) * (a - n)).sum::<f64>().sqrt();
    let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Maximal violating pair gap `m(a) - M(a)` of the SVM dual, recomputed from
/// the dual weights alone.
pub fn dual_gap(rows: &[&[f64]], y: &[f64], alphas: &[f64], cost: f64, kernel: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let n = rows.len();
    let grad: Vec<f64> = (0..n)
        .map(|i| y[i] * (0..n).map(|j| alphas[j] * y[j] * kernel(rows[i], rows[j])).sum::<f64>() - 1.0)
        .collect();
    let eps = 1e-12;
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for i in 0..n {
        let v = -y[i] * grad[i];
        let in_up = (y[i] > 0.0 && alphas[i] < cost - eps) || (y[i] < 0.0 && alphas[i] > eps);
        let in_low = (y[i] > 0.0 && alphas[i] > eps) || (y[i] < 0.0 && alphas[i] < cost - eps);
        if in_up {
            up = up.max(v);
        }
        if in_low {
            low = low.min(v);
        }
    }
    (up - low).max(0.0)
}
