use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decision_tree::{argmax_count, Criterion, DecisionTreeModel, TreeBuilder, TreeParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features drawn per split; `None` means `floor(sqrt(p))`.
    pub m_try: Option<usize>,
    pub seed: u64,
    /// Train every tree on a bootstrap resample. Off only in tests.
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 500, m_try: None, seed: 42, bootstrap: true, max_depth: None }
    }
}

impl ForestParams {
    pub fn resolved_m_try(&self, p: usize) -> usize {
        self.m_try.unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTreeModel>,
    pub m_try: usize,
    pub seed: u64,
    /// Mean decrease in Gini impurity per feature, averaged over trees.
    pub importance: Vec<f64>,
    pub n_features: usize,
    pub n_classes: usize,
}

pub fn fit_random_forest(ds: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    let n = ds.n_samples();
    let p = ds.n_features();
    if n == 0 {
        return Err(Error::InvalidDataset("cannot fit a forest on zero rows".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
    }
    let m_try = params.resolved_m_try(p);
    if m_try == 0 || m_try > p {
        return Err(Error::InvalidParameter(format!("m_try={m_try} outside [1, {p}]")));
    }
    let tree_params = TreeParams { max_depth: params.max_depth, min_samples_split: 2 };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive_seed(params.seed, &[t as u64]));
            let indices: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            TreeBuilder::new(ds, tree_params.clone(), Criterion::Gini, Some(m_try))
                .build(indices, Some(&mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut importance = vec![0.0; p];
    for tree in &trees {
        for (acc, v) in importance.iter_mut().zip(&tree.importance) {
            *acc += v;
        }
    }
    importance.iter_mut().for_each(|v| *v /= trees.len() as f64);
    Ok(ForestModel {
        trees,
        m_try,
        seed: params.seed,
        importance,
        n_features: p,
        n_classes: ds.n_classes(),
    })
}

impl ForestModel {
    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, found: x.len() });
        }
        let mut votes = vec![0; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict(x)?] += 1;
        }
        Ok(votes)
    }

    /// Majority vote, lowest class on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax_count(&self.votes(x)?))
    }

    /// Error rate on `ds` of the sub-forest made of the first `t` trees, for
    /// `t = 1..=n_trees`.
    pub fn error_trace(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let n = ds.n_samples();
        let mut votes = vec![vec![0usize; self.n_classes]; n];
        let mut trace = Vec::with_capacity(self.trees.len());
        for tree in &self.trees {
            let mut wrong = 0;
            for (i, row) in ds.rows().enumerate() {
                votes[i][tree.predict(row)?] += 1;
                if argmax_count(&votes[i]) != ds.labels()[i] {
                    wrong += 1;
                }
            }
            trace.push(wrong as f64 / n as f64);
        }
        Ok(trace)
    }
}
