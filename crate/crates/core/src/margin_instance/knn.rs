//! Brute-force k-nearest neighbors. Fitting only stores the training set.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub k: usize,
}

pub fn fit_knn(ds: &Dataset, k: usize) -> Result<KnnModel> {
    if k == 0 || k > ds.n_samples() {
        return Err(Error::InvalidParameter(format!("k={k} outside [1, {}]", ds.n_samples())));
    }
    Ok(KnnModel {
        features: ds.rows().map(<[f64]>::to_vec).collect(),
        labels: ds.labels().to_vec(),
        n_classes: ds.n_classes(),
        k,
    })
}

impl KnnModel {
    pub fn n_features(&self) -> usize {
        self.features[0].len()
    }

    /// Indices of the `k` nearest training rows: ascending Euclidean
    /// distance, lower index first on equal distance.
    pub fn neighbors(&self, x: &[f64]) -> Result<Vec<usize>> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), found: x.len() });
        }
        if self.k > self.features.len() {
            return Err(Error::InvalidParameter(format!("k={} exceeds {} rows", self.k, self.features.len())));
        }
        let mut dist: Vec<(f64, usize)> = self
            .features
            .iter()
            .enumerate()
            .map(|(i, row)| (row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(dist.into_iter().take(self.k).map(|(_, i)| i).collect())
    }

    /// Mode of the neighbors' labels, lowest class on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for i in self.neighbors(x)? {
            counts[self.labels[i]] += 1;
        }
        let mut best = 0;
        for (c, &v) in counts.iter().enumerate() {
            if v > counts[best] {
                best = c;
            }
        }
        Ok(best)
    }
}
