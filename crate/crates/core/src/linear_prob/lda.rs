//! Fisher linear discriminant analysis with a pooled within-class covariance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Ridge added to the pooled covariance, relative to its mean diagonal.
pub const LDA_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub class_means: Vec<Vec<f64>>,
    /// Regularized pooled covariance.
    pub pooled_covariance: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
    /// Prior-weighted scatter of class means around the overall mean.
    pub between_scatter: Vec<Vec<f64>>,
    pub overall_mean: Vec<f64>,
    /// LD1, LD2, ... with `v' C v = 1`.
    pub discriminant_axes: Vec<Vec<f64>>,
    /// Between/within variance ratio along each axis.
    pub eigenvalues: Vec<f64>,
    pub regularization_epsilon: f64,
    /// `C^-1 mu_j` per class.
    coefficients: Vec<Vec<f64>>,
    /// `-mu_j' C^-1 mu_j / 2 + ln p(c_j)` per class.
    intercepts: Vec<f64>,
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let p = rows.len();
    DMatrix::from_fn(p, p, |i, j| rows[i][j])
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad_form(m: &[Vec<f64>], v: &[f64]) -> f64 {
    m.iter().zip(v).map(|(row, vi)| vi * dot(row, v)).sum()
}

pub fn fit_lda(ds: &Dataset) -> Result<LdaModel> {
    let n = ds.n_samples();
    let p = ds.n_features();
    let c = ds.n_classes();
    if n <= c {
        return Err(Error::InvalidDataset(format!("LDA needs more than {c} samples, got {n}")));
    }
    let counts = ds.class_counts();
    if let Some((class, &count)) = counts.iter().enumerate().find(|(_, &k)| k < 2) {
        return Err(Error::ClassTooSmall { class, count, required: 2 });
    }

    let mut means = vec![vec![0.0; p]; c];
    for (row, &l) in ds.rows().zip(ds.labels()) {
        for (m, v) in means[l].iter_mut().zip(row) {
            *m += v;
        }
    }
    for (m, &k) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= k as f64);
    }

    // sum_j n_j C_j / n with C_j the per-class maximum-likelihood covariance
    let mut scatter = DMatrix::<f64>::zeros(p, p);
    for (row, &l) in ds.rows().zip(ds.labels()) {
        let d = DVector::from_iterator(p, row.iter().zip(&means[l]).map(|(x, m)| x - m));
        scatter += &d * d.transpose();
    }
    let mut pooled = scatter / n as f64;
    let ridge = LDA_EPSILON * pooled.trace() / p as f64;
    for i in 0..p {
        pooled[(i, i)] += ridge;
    }
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite pooled covariance".into()));
    }

    let priors: Vec<f64> = counts.iter().map(|&k| k as f64 / n as f64).collect();
    LdaModel::from_moments(means, to_rows(&pooled), priors)
}

impl LdaModel {
    /// Build a model from class means, a (positive definite) pooled
    /// covariance and class priors, without further regularization.
    pub fn from_moments(class_means: Vec<Vec<f64>>, pooled_covariance: Vec<Vec<f64>>, priors: Vec<f64>) -> Result<Self> {
        let c = class_means.len();
        let p = pooled_covariance.len();
        if c < 2 || priors.len() != c {
            return Err(Error::InvalidParameter("need at least 2 classes with one prior each".into()));
        }
        if class_means.iter().any(|m| m.len() != p) || pooled_covariance.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidParameter("mean / covariance shapes disagree".into()));
        }
        let prior_sum: f64 = priors.iter().sum();
        let priors: Vec<f64> = priors.iter().map(|v| v / prior_sum).collect();

        let cov = to_matrix(&pooled_covariance);
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("pooled covariance is not positive definite".into()))?;

        let mut overall = vec![0.0; p];
        for (m, &w) in class_means.iter().zip(&priors) {
            for (o, v) in overall.iter_mut().zip(m) {
                *o += w * v;
            }
        }
        let mut between = DMatrix::<f64>::zeros(p, p);
        for (m, &w) in class_means.iter().zip(&priors) {
            let d = DVector::from_iterator(p, m.iter().zip(&overall).map(|(a, b)| a - b));
            between += (&d * d.transpose()) * w;
        }

        // C = L L'; eigenvectors u of L^-1 B L^-T give axes v = L^-T u.
        let l = chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        let m = &l_inv * &between * l_inv.transpose();
        let m = (&m + m.transpose()) * 0.5;
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let n_axes = (c - 1).min(p);
        let mut axes = Vec::with_capacity(n_axes);
        let mut eigenvalues = Vec::with_capacity(n_axes);
        for &k in order.iter().take(n_axes) {
            let u = eig.eigenvectors.column(k).into_owned();
            let mut v: Vec<f64> = (l_inv.transpose() * u).iter().copied().collect();
            let lead = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            axes.push(v);
            eigenvalues.push(eig.eigenvalues[k].max(0.0));
        }

        let mut coefficients = Vec::with_capacity(c);
        let mut intercepts = Vec::with_capacity(c);
        for (m, &prior) in class_means.iter().zip(&priors) {
            let w = chol.solve(&DVector::from_column_slice(m));
            let w: Vec<f64> = w.iter().copied().collect();
            intercepts.push(-0.5 * dot(&w, m) + prior.ln());
            coefficients.push(w);
        }

        Ok(Self {
            class_means,
            pooled_covariance,
            priors,
            between_scatter: to_rows(&between),
            overall_mean: overall,
            discriminant_axes: axes,
            eigenvalues,
            regularization_epsilon: LDA_EPSILON,
            coefficients,
            intercepts,
        })
    }

    pub fn n_features(&self) -> usize {
        self.pooled_covariance.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_means.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), found: x.len() });
        }
        Ok(())
    }

    fn check_class(&self, k: usize) -> Result<()> {
        if k >= self.n_classes() {
            return Err(Error::LabelOutOfRange { label: k, classes: self.n_classes() });
        }
        Ok(())
    }

    fn mean_diff(&self, i: usize, j: usize) -> Vec<f64> {
        self.class_means[i].iter().zip(&self.class_means[j]).map(|(a, b)| a - b).collect()
    }

    /// Pairwise Fisher criterion `(b'(mu_i - mu_j))^2 / b'Cb`.
    pub fn score(&self, direction: &[f64], class_i: usize, class_j: usize) -> Result<f64> {
        self.check_dim(direction)?;
        self.check_class(class_i)?;
        self.check_class(class_j)?;
        if direction.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidParameter("zero direction".into()));
        }
        let num = dot(direction, &self.mean_diff(class_i, class_j));
        Ok(num * num / quad_form(&self.pooled_covariance, direction))
    }

    /// Multiclass Fisher criterion `b'Bb / b'Cb`; LD1 maximizes it.
    pub fn fisher_ratio(&self, direction: &[f64]) -> Result<f64> {
        self.check_dim(direction)?;
        if direction.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidParameter("zero direction".into()));
        }
        Ok(quad_form(&self.between_scatter, direction) / quad_form(&self.pooled_covariance, direction))
    }

    /// `C^-1 (mu_i - mu_j)`, the two-class discriminant direction.
    pub fn pairwise_direction(&self, class_i: usize, class_j: usize) -> Result<Vec<f64>> {
        self.check_class(class_i)?;
        self.check_class(class_j)?;
        let chol = to_matrix(&self.pooled_covariance)
            .cholesky()
            .ok_or_else(|| Error::Numerical("pooled covariance is not positive definite".into()))?;
        let d = DVector::from_vec(self.mean_diff(class_i, class_j));
        Ok(chol.solve(&d).iter().copied().collect())
    }

    /// Squared Mahalanobis distance between two class means.
    pub fn mahalanobis_sq(&self, class_i: usize, class_j: usize) -> Result<f64> {
        let beta = self.pairwise_direction(class_i, class_j)?;
        Ok(dot(&beta, &self.mean_diff(class_i, class_j)).max(0.0))
    }

    /// Linear discriminant scores `x'C^-1 mu_j - mu_j'C^-1 mu_j / 2 + ln p(c_j)`.
    pub fn decision_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.coefficients.iter().zip(&self.intercepts).map(|(w, b)| dot(w, x) + b).collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.decision_scores(x)?))
    }

    /// Coordinates of `x` (centered on the overall mean) along LD1, LD2, ...
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let centered: Vec<f64> = x.iter().zip(&self.overall_mean).map(|(a, b)| a - b).collect();
        Ok(self.discriminant_axes.iter().map(|v| dot(v, &centered)).collect())
    }

    /// One row per feature with its coefficient on each discriminant axis.
    pub fn coefficient_table(&self, feature_names: &[String]) -> Vec<(String, Vec<f64>)> {
        feature_names
            .iter()
            .enumerate()
            .map(|(f, name)| (name.clone(), self.discriminant_axes.iter().map(|v| v[f]).collect()))
            .collect()
    }
}

/// First index of the maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    best
}
