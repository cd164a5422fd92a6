//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! The last class is the reference: its weight row is pinned at zero, so for
//! two classes the model is the ordinary log-odds rule.

use serde::{Deserialize, Serialize};

use super::lda::argmax;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub max_iter: usize,
    /// Stop once an epoch improves the loss by less than this.
    pub tolerance: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, max_iter: 5000, tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// One row per class: intercept followed by `p` slopes.
    pub weights: Vec<Vec<f64>>,
    pub iterations: usize,
    pub final_loss: f64,
    /// Mean cross-entropy before each update.
    pub loss_trace: Vec<f64>,
}

fn linear_scores(weights: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    weights.iter().map(|w| w[0] + w[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).collect()
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

/// Mean cross-entropy of `weights` on `ds` and its gradient. The gradient
/// row of the reference class is zero.
pub fn loss_and_gradient(weights: &[Vec<f64>], ds: &Dataset) -> (f64, Vec<Vec<f64>>) {
    let c = weights.len();
    let p = ds.n_features();
    let n = ds.n_samples() as f64;
    let mut loss = 0.0;
    let mut grad = vec![vec![0.0; p + 1]; c];
    for (x, &y) in ds.rows().zip(ds.labels()) {
        let scores = linear_scores(weights, x);
        loss += log_sum_exp(&scores) - scores[y];
        let probs = softmax(&scores);
        for k in 0..c - 1 {
            let r = probs[k] - f64::from(u8::from(k == y));
            grad[k][0] += r;
            for (g, &xi) in grad[k][1..].iter_mut().zip(x) {
                *g += r * xi;
            }
        }
    }
    grad.iter_mut().flatten().for_each(|g| *g /= n);
    (loss / n, grad)
}

pub fn fit_logistic(ds: &Dataset, config: &LogisticConfig) -> Result<LogisticModel> {
    let c = ds.n_classes();
    let p = ds.n_features();
    if ds.n_samples() < c {
        return Err(Error::InvalidDataset(format!(
            "logistic regression needs at least {c} samples, got {}",
            ds.n_samples()
        )));
    }
    if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidParameter(format!("learning rate {}", config.learning_rate)));
    }
    let mut weights = vec![vec![0.0; p + 1]; c];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut final_loss = f64::NAN;
    for iter in 0..=config.max_iter {
        let (loss, grad) = loss_and_gradient(&weights, ds);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss(iter));
        }
        final_loss = loss;
        let converged = trace.last().is_some_and(|&prev: &f64| prev - loss < config.tolerance);
        trace.push(loss);
        if converged || iter == config.max_iter {
            break;
        }
        for (w, g) in weights.iter_mut().zip(&grad).take(c - 1) {
            for (wi, gi) in w.iter_mut().zip(g) {
                *wi -= config.learning_rate * gi;
            }
        }
        iterations += 1;
    }
    Ok(LogisticModel { weights, iterations, final_loss, loss_trace: trace })
}

impl LogisticModel {
    pub fn n_features(&self) -> usize {
        self.weights[0].len() - 1
    }

    pub fn n_classes(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), found: x.len() });
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(softmax(&linear_scores(&self.weights, x)))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        self.check_dim(x)?;
        Ok(argmax(&linear_scores(&self.weights, x)))
    }

    /// Two-class models only: `ln(p1 / p0)`, the linear discriminant for
    /// class 1. Class 1 is predicted exactly when this is positive.
    pub fn log_odds(&self, x: &[f64]) -> Result<f64> {
        if self.n_classes() != 2 {
            return Err(Error::InvalidParameter("log-odds needs a two-class model".into()));
        }
        self.check_dim(x)?;
        let s = linear_scores(&self.weights, x);
        Ok(s[1] - s[0])
    }
}
