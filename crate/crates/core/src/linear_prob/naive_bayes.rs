//! Gaussian naive Bayes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::lda::argmax;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Variance floor, relative to the feature's overall variance.
pub const NB_VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianParams {
    pub fn log_density(&self, x: f64) -> f64 {
        // Scale before squaring so large deviations do not overflow.
        let z = (x - self.mean) / self.variance.sqrt();
        -0.5 * (2.0 * PI * self.variance).ln() - 0.5 * z * z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub priors: Vec<f64>,
    /// `params[class][feature]`.
    pub params: Vec<Vec<GaussianParams>>,
    pub variance_floor: Vec<f64>,
}

pub fn fit_naive_bayes(ds: &Dataset) -> Result<NaiveBayesModel> {
    let n = ds.n_samples();
    let p = ds.n_features();
    let counts = ds.class_counts();
    if let Some(class) = counts.iter().position(|&k| k == 0) {
        return Err(Error::ClassTooSmall { class, count: 0, required: 1 });
    }

    let variance_floor: Vec<f64> = (0..p)
        .map(|f| NB_VARIANCE_FLOOR * (population_variance(&ds.column(f)) + 1e-12))
        .collect();

    let mut params = Vec::with_capacity(counts.len());
    for class in 0..counts.len() {
        let rows: Vec<&[f64]> =
            ds.rows().zip(ds.labels()).filter(|(_, &l)| l == class).map(|(r, _)| r).collect();
        let per_feature = (0..p)
            .map(|f| {
                let values: Vec<f64> = rows.iter().map(|r| r[f]).collect();
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                let variance = population_variance(&values).max(variance_floor[f]);
                GaussianParams { mean, variance }
            })
            .collect();
        params.push(per_feature);
    }
    let priors = counts.iter().map(|&k| k as f64 / n as f64).collect();
    Ok(NaiveBayesModel { priors, params, variance_floor })
}

fn population_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

impl NaiveBayesModel {
    pub fn n_features(&self) -> usize {
        self.params[0].len()
    }

    pub fn n_classes(&self) -> usize {
        self.priors.len()
    }

    /// Unnormalized log posterior `ln p(C_j) + sum_k ln p(x_k | C_j)`.
    pub fn joint_log_likelihood(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), found: x.len() });
        }
        Ok(self
            .priors
            .iter()
            .zip(&self.params)
            .map(|(prior, ps)| prior.ln() + ps.iter().zip(x).map(|(g, &v)| g.log_density(v)).sum::<f64>())
            .collect())
    }

    pub fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        let log = self.joint_log_likelihood(x)?;
        let max = log.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = log.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        Ok(exps.into_iter().map(|e| e / z).collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.joint_log_likelihood(x)?))
    }
}
