//! Soft-margin kernel SVM. The dual problem
//!
//! ```text
//! min  1/2 a'Qa - e'a   s.t.  y'a = 0,  0 <= a_i <= C,   Q_ij = y_i y_j k(x_i, x_j)
//! ```
//!
//! is solved by sequential minimal optimization: each step picks the pair
//! with the largest KKT violation (second-order selection for the partner)
//! and solves the two-variable subproblem in closed form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{default_gamma, KernelSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;
/// Dual weights above this mark a support vector.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub cost: f64,
    /// `None` selects an RBF kernel with gamma = 1/p.
    pub kernel: Option<KernelSpec>,
    /// Stop when the maximal KKT violation drops below this.
    pub tolerance: f64,
    /// Iteration cap is `max_iter_per_sample * n`.
    pub max_iter_per_sample: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { cost: 1.0, kernel: None, tolerance: 1e-3, max_iter_per_sample: 10_000 }
    }
}

impl SvmParams {
    pub fn resolved_kernel(&self, n_features: usize) -> KernelSpec {
        self.kernel.unwrap_or(KernelSpec::Rbf { gamma: default_gamma(n_features) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmBinaryModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    /// Row index of each support vector in the training set.
    pub support_indices: Vec<usize>,
    pub bias: f64,
    pub cost: f64,
    pub kernel: KernelSpec,
    /// Dual weights of every training row.
    pub alphas: Vec<f64>,
    /// +1 / -1 training targets.
    pub targets: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub kkt_violation: f64,
}

impl SvmBinaryModel {
    pub fn n_features(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    /// `sum_i alpha_i y_i k(sv_i, x) + b`; positive means the +1 class.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if let Some(sv) = self.support_vectors.first() {
            if sv.len() != x.len() {
                return Err(Error::DimensionMismatch { expected: sv.len(), found: x.len() });
            }
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    /// `|sum_i alpha_i y_i|`.
    pub fn equality_residual(&self) -> f64 {
        self.alphas.iter().zip(&self.targets).map(|(a, y)| a * y).sum::<f64>().abs()
    }
}

/// Train on a two-class dataset; class 0 becomes +1 and class 1 becomes -1.
pub fn fit_svm_binary(ds: &Dataset, params: &SvmParams) -> Result<SvmBinaryModel> {
    if ds.n_classes() != 2 {
        return Err(Error::InvalidParameter(format!(
            "binary SVM needs exactly 2 classes, dataset has {}",
            ds.n_classes()
        )));
    }
    let rows: Vec<&[f64]> = ds.rows().collect();
    let targets: Vec<f64> = ds.labels().iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
    solve(&rows, &targets, params.cost, params.resolved_kernel(ds.n_features()), params)
}

fn solve(
    rows: &[&[f64]],
    targets: &[f64],
    cost: f64,
    kernel: KernelSpec,
    params: &SvmParams,
) -> Result<SvmBinaryModel> {
    let n = rows.len();
    if !(cost > 0.0 && cost.is_finite()) {
        return Err(Error::InvalidParameter(format!("cost must be positive, got {cost}")));
    }
    kernel.validate()?;
    if !targets.contains(&1.0) || !targets.contains(&-1.0) {
        return Err(Error::InvalidDataset("SVM training data contains a single class".into()));
    }

    let gram: Vec<Vec<f64>> =
        rows.iter().map(|a| rows.iter().map(|b| kernel.eval_unchecked(a, b)).collect()).collect();
    let q = |i: usize, j: usize| targets[i] * targets[j] * gram[i][j];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = params.max_iter_per_sample.saturating_mul(n).max(1);
    let mut iterations = 0;
    let mut converged = false;
    let mut violation = f64::INFINITY;

    while iterations < max_iter {
        let Some((i, j, gap)) = select_pair(&alpha, &grad, targets, cost, &gram) else {
            violation = 0.0;
            converged = true;
            break;
        };
        violation = gap;
        if gap < params.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if targets[i] != targets[j] {
            let quad = positive(gram[i][i] + gram[j][j] + 2.0 * q(i, j));
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > cost {
                    alpha[i] = cost;
                    alpha[j] = cost - diff;
                }
            } else if alpha[j] > cost {
                alpha[j] = cost;
                alpha[i] = cost + diff;
            }
        } else {
            let quad = positive(gram[i][i] + gram[j][j] - 2.0 * q(i, j));
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > cost {
                if alpha[i] > cost {
                    alpha[i] = cost;
                    alpha[j] = sum - cost;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cost {
                if alpha[j] > cost {
                    alpha[j] = cost;
                    alpha[i] = sum - cost;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    let bias = -rho(&alpha, &grad, targets, cost);
    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > SUPPORT_THRESHOLD).collect();
    Ok(SvmBinaryModel {
        support_vectors: support.iter().map(|&t| rows[t].to_vec()).collect(),
        dual_coef: support.iter().map(|&t| alpha[t] * targets[t]).collect(),
        support_indices: support,
        bias,
        cost,
        kernel,
        alphas: alpha,
        targets: targets.to_vec(),
        converged,
        iterations,
        kkt_violation: violation,
    })
}

fn positive(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        TAU
    }
}

/// Maximal violating pair. Returns `None` when no index can move.
fn select_pair(
    alpha: &[f64],
    grad: &[f64],
    y: &[f64],
    cost: f64,
    gram: &[Vec<f64>],
) -> Option<(usize, usize, f64)> {
    let n = alpha.len();
    let mut g_max = f64::NEG_INFINITY;
    let mut i = None;
    for t in 0..n {
        let movable = if y[t] > 0.0 { alpha[t] < cost } else { alpha[t] > 0.0 };
        if movable && -y[t] * grad[t] >= g_max {
            g_max = -y[t] * grad[t];
            i = Some(t);
        }
    }
    let i = i?;

    let mut g_max2 = f64::NEG_INFINITY;
    let mut best_obj = f64::INFINITY;
    let mut j = None;
    for t in 0..n {
        let movable = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < cost };
        if !movable {
            continue;
        }
        let yg = y[t] * grad[t];
        g_max2 = g_max2.max(yg);
        let grad_diff = g_max + yg;
        if grad_diff > 0.0 {
            let quad = positive(gram[i][i] + gram[t][t] - 2.0 * gram[i][t]);
            let obj = -grad_diff * grad_diff / quad;
            if obj <= best_obj {
                best_obj = obj;
                j = Some(t);
            }
        }
    }
    let gap = g_max + g_max2;
    match j {
        Some(j) => Some((i, j, gap)),
        // nothing improves: report the gap so the caller can stop
        None => Some((i, i, gap.min(0.0))),
    }
}

/// Offset `rho` with decision `f(x) = sum a_i y_i k(x_i, x) - rho`: mean of
/// `y_i G_i` over free vectors, else the midpoint of the bound-implied range.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], cost: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= cost {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// One-vs-one ensemble of binary machines, one per class pair `(a, b)` with
/// `a < b`; class `a` is the +1 side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmMulticlassModel {
    pub pairs: Vec<(usize, usize)>,
    pub machines: Vec<SvmBinaryModel>,
    /// Training-set row indices of each machine's support vectors.
    pub support_rows: Vec<Vec<usize>>,
    pub n_classes: usize,
    pub n_features: usize,
    pub cost: f64,
    pub kernel: KernelSpec,
}

pub fn fit_svm_multiclass(ds: &Dataset, params: &SvmParams) -> Result<SvmMulticlassModel> {
    let c = ds.n_classes();
    let kernel = params.resolved_kernel(ds.n_features());
    let pairs: Vec<(usize, usize)> = (0..c).flat_map(|a| (a + 1..c).map(move |b| (a, b))).collect();
    let fitted = pairs
        .par_iter()
        .map(|&(a, b)| {
            let members: Vec<usize> =
                (0..ds.n_samples()).filter(|&i| ds.labels()[i] == a || ds.labels()[i] == b).collect();
            let rows: Vec<&[f64]> = members.iter().map(|&i| ds.row(i)).collect();
            let targets: Vec<f64> =
                members.iter().map(|&i| if ds.labels()[i] == a { 1.0 } else { -1.0 }).collect();
            let machine = solve(&rows, &targets, params.cost, kernel, params).map_err(|e| {
                Error::InvalidDataset(format!(
                    "pair ({}, {}): {e}",
                    ds.class_names()[a],
                    ds.class_names()[b]
                ))
            })?;
            let sv_rows = machine.support_indices.iter().map(|&k| members[k]).collect::<Vec<_>>();
            Ok((machine, sv_rows))
        })
        .collect::<Result<Vec<_>>>()?;
    let (machines, support_rows) = fitted.into_iter().unzip();
    Ok(SvmMulticlassModel {
        pairs,
        machines,
        support_rows,
        n_classes: c,
        n_features: ds.n_features(),
        cost: params.cost,
        kernel,
    })
}

impl SvmMulticlassModel {
    /// Win count and summed winning margin per class.
    pub fn votes(&self, x: &[f64]) -> Result<(Vec<usize>, Vec<f64>)> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, found: x.len() });
        }
        let mut wins = vec![0usize; self.n_classes];
        let mut margin = vec![0.0; self.n_classes];
        for (&(a, b), m) in self.pairs.iter().zip(&self.machines) {
            let d = m.decision_value(x)?;
            let winner = if d >= 0.0 { a } else { b };
            wins[winner] += 1;
            margin[winner] += d.abs();
        }
        Ok((wins, margin))
    }

    /// Most pairwise wins; ties go to the larger summed margin, then the
    /// lower class index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let (wins, margin) = self.votes(x)?;
        let mut best = 0;
        for k in 1..self.n_classes {
            if wins[k] > wins[best] || (wins[k] == wins[best] && margin[k] > margin[best]) {
                best = k;
            }
        }
        Ok(best)
    }

    /// Support vectors counted once per machine.
    pub fn total_support_vectors(&self) -> usize {
        self.support_rows.iter().map(Vec::len).sum()
    }

    /// Distinct training rows that are a support vector of any machine.
    pub fn unique_support_vectors(&self) -> usize {
        let mut rows: Vec<usize> = self.support_rows.iter().flatten().copied().collect();
        rows.sort_unstable();
        rows.dedup();
        rows.len()
    }

    pub fn converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }

    pub fn summary(&self, class_names: &[String]) -> SvmSummary {
        SvmSummary {
            svm_type: "C-classification".into(),
            kernel: self.kernel.name().into(),
            cost: self.cost,
            gamma: self.kernel.gamma(),
            support_vectors_total: self.total_support_vectors(),
            support_vectors_unique: self.unique_support_vectors(),
            n_classes: self.n_classes,
            levels: class_names.to_vec(),
        }
    }
}

/// Parameter sheet of a fitted multiclass SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmSummary {
    pub svm_type: String,
    pub kernel: String,
    pub cost: f64,
    pub gamma: Option<f64>,
    pub support_vectors_total: usize,
    pub support_vectors_unique: usize,
    pub n_classes: usize,
    pub levels: Vec<String>,
}

impl SvmSummary {
    pub fn to_table(&self) -> String {
        let gamma = self.gamma.map_or_else(|| "-".to_string(), |g| g.to_string());
        [
            format!("SVM-Type\t{}", self.svm_type),
            format!("SVM-Kernel\t{}", self.kernel),
            format!("Cost\t{}", self.cost),
            format!("Gamma\t{gamma}"),
            format!(
                "Number of Support Vectors\t{} (summed over pairs) / {} (distinct rows)",
                self.support_vectors_total, self.support_vectors_unique
            ),
            format!("Number of Classes\t{}", self.n_classes),
            format!("Levels\t{}", self.levels.join(", ")),
        ]
        .join("\n")
    }
}
