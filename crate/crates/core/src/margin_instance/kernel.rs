use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    /// `exp(-gamma * |x - y|^2)`
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "radial",
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            KernelSpec::Linear => None,
            KernelSpec::Rbf { gamma } => Some(*gamma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Rbf { gamma } if !(*gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::InvalidParameter(format!("rbf gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok(spec.eval_unchecked(x, y))
}

/// `1 / p`, which is 0.125 for the eight-variable ecological table.
pub fn default_gamma(n_features: usize) -> f64 {
    1.0 / n_features.max(1) as f64
}
