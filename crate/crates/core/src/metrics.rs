//! Confusion matrices and the recall / precision / accuracy / F-score suite.
//!
//! Multiclass results are reduced to a single set of binary aggregates by
//! averaging the one-vs-rest counts of every class and dividing by the grand
//! total, so the four components sum to one and the binary formulas apply
//! unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are actual classes, columns are predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(n_classes: usize) -> Self {
        Self { counts: vec![vec![0; n_classes]; n_classes] }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if c == 0 {
            return Err(Error::InvalidParameter("empty confusion matrix".into()));
        }
        if let Some(row) = counts.iter().find(|r| r.len() != c) {
            return Err(Error::LengthMismatch(row.len(), c));
        }
        Ok(Self { counts })
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|k| self.counts[k][k]).sum()
    }

    /// Fraction of samples on the diagonal.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    pub fn record(&mut self, actual: usize, predicted: usize) -> Result<()> {
        let c = self.n_classes();
        for label in [actual, predicted] {
            if label >= c {
                return Err(Error::LabelOutOfRange { label, classes: c });
            }
        }
        self.counts[actual][predicted] += 1;
        Ok(())
    }

    /// Element-wise sum of two matrices of the same size.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n_classes() != self.n_classes() {
            return Err(Error::LengthMismatch(self.n_classes(), other.n_classes()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }
}

pub fn confusion_matrix(actual: &[usize], predicted: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(Error::InvalidParameter("no samples to score".into()));
    }
    let mut cm = ConfusionMatrix::zeros(n_classes);
    for (&a, &p) in actual.iter().zip(predicted) {
        cm.record(a, p)?;
    }
    Ok(cm)
}

/// True/false positive/negative totals. Raw counts for a one-vs-rest
/// reduction, fractions of the grand total after [`macro_aggregate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryAggregates {
    pub tp: f64,
    pub fp: f64,
    pub tn: f64,
    pub fn_: f64,
}

impl BinaryAggregates {
    pub fn new(tp: f64, fp: f64, tn: f64, fn_: f64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> f64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Treat `class_index` as positive and every other class as negative.
pub fn one_vs_rest(cm: &ConfusionMatrix, class_index: usize) -> Result<BinaryAggregates> {
    let c = cm.n_classes();
    if class_index >= c {
        return Err(Error::LabelOutOfRange { label: class_index, classes: c });
    }
    let k = class_index;
    let tp = cm.counts[k][k];
    let row: u64 = cm.counts[k].iter().sum();
    let col: u64 = cm.counts.iter().map(|r| r[k]).sum();
    let fn_ = row - tp;
    let fp = col - tp;
    let tn = cm.total() - tp - fn_ - fp;
    Ok(BinaryAggregates::new(tp as f64, fp as f64, tn as f64, fn_ as f64))
}

/// Mean of the per-class one-vs-rest counts, each divided by the grand total.
pub fn macro_aggregate(cm: &ConfusionMatrix) -> Result<BinaryAggregates> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidParameter("confusion matrix is empty".into()));
    }
    let c = cm.n_classes();
    let scale = 1.0 / (c as f64 * total as f64);
    let mut acc = BinaryAggregates::new(0.0, 0.0, 0.0, 0.0);
    for k in 0..c {
        let a = one_vs_rest(cm, k)?;
        acc.tp += a.tp;
        acc.fp += a.fp;
        acc.tn += a.tn;
        acc.fn_ += a.fn_;
    }
    Ok(BinaryAggregates::new(acc.tp * scale, acc.fp * scale, acc.tn * scale, acc.fn_ * scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSet {
    pub recall: f64,
    pub precision: f64,
    pub accuracy: f64,
    pub f_score: f64,
}

/// Recall, precision, accuracy and F-score of a binary reduction. Empty
/// denominators give 0.
pub fn measures(agg: &BinaryAggregates) -> Result<MeasureSet> {
    let BinaryAggregates { tp, fp, tn, fn_ } = *agg;
    if [tp, fp, tn, fn_].iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParameter(format!("invalid aggregates {agg:?}")));
    }
    let total = agg.total();
    if total <= 0.0 {
        return Err(Error::InvalidParameter("all-zero aggregates".into()));
    }
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let recall = ratio(tp, tp + fn_);
    let precision = ratio(tp, tp + fp);
    let accuracy = (tp + tn) / total;
    let f_score = ratio(2.0 * precision * recall, precision + recall);
    Ok(MeasureSet { recall, precision, accuracy, f_score })
}
