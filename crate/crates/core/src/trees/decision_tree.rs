use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::impurity::{entropy_unchecked, gini_unchecked};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::Rng;

/// Gains at or below this are treated as zero.
const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    /// Information gain (entropy in bits).
    Entropy,
    Gini,
}

impl Criterion {
    fn impurity(self, counts: &[usize], total: usize) -> f64 {
        match self {
            Criterion::Entropy => entropy_unchecked(counts, total),
            Criterion::Gini => gini_unchecked(counts, total),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        class_index: usize,
        distribution: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    /// Indented rule listing, one node per line.
    pub fn render(&self, feature_names: &[String], class_names: &[String]) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0, feature_names, class_names);
        out
    }

    fn render_into(&self, out: &mut String, indent: usize, features: &[String], classes: &[String]) {
        let pad = "  ".repeat(indent);
        match self {
            TreeNode::Leaf { class_index, distribution } => {
                let dist: Vec<String> = distribution.iter().map(|p| format!("{p:.3}")).collect();
                out.push_str(&format!("{pad}-> {} [{}]\n", classes[*class_index], dist.join(", ")));
            }
            TreeNode::Split { feature, threshold, left, right } => {
                out.push_str(&format!("{pad}{} <= {threshold}\n", features[*feature]));
                left.render_into(out, indent + 1, features, classes);
                out.push_str(&format!("{pad}{} > {threshold}\n", features[*feature]));
                right.render_into(out, indent + 1, features, classes);
            }
        }
    }

    /// Leaf reached by `x`; `x[feature] <= threshold` goes left.
    pub fn leaf_for(&self, x: &[f64]) -> &TreeNode {
        let mut node = self;
        while let TreeNode::Split { feature, threshold, left, right } = node {
            node = if x[*feature] <= *threshold { left } else { right };
        }
        node
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until the stopping rules fire.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: None, min_samples_split: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    pub root: TreeNode,
    pub params: TreeParams,
    pub criterion: Criterion,
    pub n_features: usize,
    pub n_classes: usize,
    /// Sum over splits of (node share of training rows) x (impurity decrease).
    pub importance: Vec<f64>,
}

impl DecisionTreeModel {
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, found: x.len() });
        }
        match self.root.leaf_for(x) {
            TreeNode::Leaf { class_index, .. } => Ok(*class_index),
            TreeNode::Split { .. } => unreachable!("leaf_for stops at a leaf"),
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, found: x.len() });
        }
        match self.root.leaf_for(x) {
            TreeNode::Leaf { distribution, .. } => Ok(distribution.clone()),
            TreeNode::Split { .. } => unreachable!("leaf_for stops at a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

/// Greedy information-gain tree over midpoint thresholds.
pub fn fit_decision_tree(ds: &Dataset, params: &TreeParams) -> Result<DecisionTreeModel> {
    let indices: Vec<usize> = (0..ds.n_samples()).collect();
    TreeBuilder::new(ds, params.clone(), Criterion::Entropy, None).build(indices, None)
}

/// Same induction with an explicit impurity criterion.
pub fn fit_tree_with_criterion(
    ds: &Dataset,
    params: &TreeParams,
    criterion: Criterion,
) -> Result<DecisionTreeModel> {
    let indices: Vec<usize> = (0..ds.n_samples()).collect();
    TreeBuilder::new(ds, params.clone(), criterion, None).build(indices, None)
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

pub(crate) struct TreeBuilder<'a> {
    ds: &'a Dataset,
    params: TreeParams,
    criterion: Criterion,
    /// Features examined per split; `None` means all of them.
    m_try: Option<usize>,
    importance: Vec<f64>,
    n_root: usize,
}

impl<'a> TreeBuilder<'a> {
    pub(crate) fn new(ds: &'a Dataset, params: TreeParams, criterion: Criterion, m_try: Option<usize>) -> Self {
        Self { ds, params, criterion, m_try, importance: vec![0.0; ds.n_features()], n_root: 0 }
    }

    /// Grow a tree on `indices` (duplicates allowed, as in a bootstrap).
    pub(crate) fn build(mut self, indices: Vec<usize>, mut rng: Option<&mut Rng>) -> Result<DecisionTreeModel> {
        if indices.is_empty() {
            return Err(Error::InvalidDataset("cannot fit a tree on zero rows".into()));
        }
        if self.params.min_samples_split < 2 {
            return Err(Error::InvalidParameter("min_samples_split must be at least 2".into()));
        }
        self.n_root = indices.len();
        let root = self.grow(indices, 0, &mut rng);
        Ok(DecisionTreeModel {
            root,
            params: self.params,
            criterion: self.criterion,
            n_features: self.ds.n_features(),
            n_classes: self.ds.n_classes(),
            importance: self.importance,
        })
    }

    fn counts(&self, indices: &[usize]) -> Vec<usize> {
        let labels = self.ds.labels();
        let mut counts = vec![0; self.ds.n_classes()];
        for &i in indices {
            counts[labels[i]] += 1;
        }
        counts
    }

    fn leaf(counts: &[usize], total: usize) -> TreeNode {
        let class_index = argmax_count(counts);
        let distribution = counts.iter().map(|&k| k as f64 / total as f64).collect();
        TreeNode::Leaf { class_index, distribution }
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize, rng: &mut Option<&mut Rng>) -> TreeNode {
        let n = indices.len();
        let counts = self.counts(&indices);
        let impurity = self.criterion.impurity(&counts, n);
        let at_depth_cap = self.params.max_depth.is_some_and(|d| depth >= d);
        if impurity <= GAIN_EPS || at_depth_cap || n < self.params.min_samples_split {
            return Self::leaf(&counts, n);
        }
        let Some(best) = self.best_split(&indices, &counts, impurity, rng) else {
            return Self::leaf(&counts, n);
        };
        // A zero-gain split is still taken: it shrinks both children, so
        // growth continues until nodes are pure or inseparable.
        let x = |i: usize| self.ds.row(i)[best.feature];
        let (left, right): (Vec<usize>, Vec<usize>) =
            indices.iter().partition(|&&i| x(i) <= best.threshold);
        self.importance[best.feature] += n as f64 / self.n_root as f64 * best.gain.max(0.0);
        let left = self.grow(left, depth + 1, rng);
        let right = self.grow(right, depth + 1, rng);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn best_split(
        &self,
        indices: &[usize],
        counts: &[usize],
        impurity: f64,
        rng: &mut Option<&mut Rng>,
    ) -> Option<Candidate> {
        let p = self.ds.n_features();
        let order: Vec<usize> = match (self.m_try, rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < p => {
                let mut all: Vec<usize> = (0..p).collect();
                all.shuffle(rng);
                // Examine m features at a time; move on to the next batch
                // only if none of them can split this node.
                for batch in all.chunks(m) {
                    let mut batch = batch.to_vec();
                    batch.sort_unstable();
                    if let Some(c) = self.scan_features(&batch, indices, counts, impurity) {
                        return Some(c);
                    }
                }
                return None;
            }
            _ => (0..p).collect(),
        };
        self.scan_features(&order, indices, counts, impurity)
    }

    /// Best candidate over `features` (ascending). Ties keep the earlier
    /// feature and the lower threshold.
    fn scan_features(
        &self,
        features: &[usize],
        indices: &[usize],
        counts: &[usize],
        impurity: f64,
    ) -> Option<Candidate> {
        let n = indices.len();
        let labels = self.ds.labels();
        let mut best: Option<Candidate> = None;
        let mut sorted = indices.to_vec();
        for &f in features {
            let value = |i: usize| self.ds.row(i)[f];
            sorted.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
            let mut left = vec![0usize; counts.len()];
            for pos in 0..n - 1 {
                left[labels[sorted[pos]]] += 1;
                let (lo, hi) = (value(sorted[pos]), value(sorted[pos + 1]));
                if lo == hi {
                    continue;
                }
                let n_left = pos + 1;
                let right: Vec<usize> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
                let child = (n_left as f64 * self.criterion.impurity(&left, n_left)
                    + (n - n_left) as f64 * self.criterion.impurity(&right, n - n_left))
                    / n as f64;
                let gain = impurity - child;
                if best.as_ref().is_none_or(|b| gain > b.gain + GAIN_EPS) {
                    best = Some(Candidate { feature: f, threshold: midpoint(lo, hi), gain });
                }
            }
        }
        best
    }
}

/// A threshold `t` with `lo <= t < hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}

/// Index of the largest count, lowest index on ties.
pub(crate) fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}
