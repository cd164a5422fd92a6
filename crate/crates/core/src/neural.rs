//! Single-hidden-layer feed-forward network: sigmoid hidden units, linear
//! outputs (one per class), trained by full-batch gradient descent on the
//! sum of squared errors against one-hot targets.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub n_outputs: usize,
    /// `hidden_weights[j][i]`: input `i` to hidden unit `j`.
    pub hidden_weights: Vec<Vec<f64>>,
    pub hidden_bias: Vec<f64>,
    /// `output_weights[k][j]`: hidden unit `j` to output `k`.
    pub output_weights: Vec<Vec<f64>>,
    pub output_bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub init_scale: f64,
    /// Stop once an epoch lowers the SSE by less than this.
    pub min_improvement: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 5,
            epochs: 2000,
            learning_rate: 0.01,
            seed: 42,
            init_scale: 0.5,
            min_improvement: 1e-10,
        }
    }
}

/// SSE recorded before each weight update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub sse: Vec<f64>,
    pub steps: usize,
}

impl TrainTrace {
    pub fn final_sse(&self) -> f64 {
        self.sse.last().copied().unwrap_or(f64::NAN)
    }

    /// `Error: <sse> Steps: <steps>`
    pub fn caption(&self) -> String {
        format!("Error: {:.3} Steps: {}", self.final_sse(), self.steps)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,sse\n");
        for (e, v) in self.sse.iter().enumerate() {
            out.push_str(&format!("{},{}\n", e + 1, v));
        }
        out
    }
}

impl MlpModel {
    pub fn zeros(n_inputs: usize, n_hidden: usize, n_outputs: usize) -> Self {
        Self {
            n_inputs,
            n_hidden,
            n_outputs,
            hidden_weights: vec![vec![0.0; n_inputs]; n_hidden],
            hidden_bias: vec![0.0; n_hidden],
            output_weights: vec![vec![0.0; n_hidden]; n_outputs],
            output_bias: vec![0.0; n_outputs],
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_hidden * (self.n_inputs + 1) + self.n_outputs * (self.n_hidden + 1)
    }

    /// Flattened parameters: hidden weights (row-major), hidden biases,
    /// output weights (row-major), output biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        self.hidden_weights.iter().for_each(|r| out.extend_from_slice(r));
        out.extend_from_slice(&self.hidden_bias);
        self.output_weights.iter().for_each(|r| out.extend_from_slice(r));
        out.extend_from_slice(&self.output_bias);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::LengthMismatch(params.len(), self.n_params()));
        }
        let mut it = params.iter().copied();
        for row in &mut self.hidden_weights {
            row.iter_mut().for_each(|w| *w = it.next().unwrap());
        }
        self.hidden_bias.iter_mut().for_each(|w| *w = it.next().unwrap());
        for row in &mut self.output_weights {
            row.iter_mut().for_each(|w| *w = it.next().unwrap());
        }
        self.output_bias.iter_mut().for_each(|w| *w = it.next().unwrap());
        Ok(())
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        self.hidden_weights
            .iter()
            .zip(&self.hidden_bias)
            .map(|(w, b)| sigmoid(b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>()))
            .collect()
    }

    fn outputs(&self, h: &[f64]) -> Vec<f64> {
        self.output_weights
            .iter()
            .zip(&self.output_bias)
            .map(|(w, b)| b + w.iter().zip(h).map(|(a, v)| a * v).sum::<f64>())
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_inputs {
            return Err(Error::DimensionMismatch { expected: self.n_inputs, found: x.len() });
        }
        Ok(self.outputs(&self.hidden(x)))
    }

    /// Argmax of the outputs, lowest index on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let y = self.forward(x)?;
        let mut best = 0;
        for (k, &v) in y.iter().enumerate() {
            if v > y[best] {
                best = k;
            }
        }
        Ok(best)
    }
}

/// `1/2 sum ||y - t||^2` over `ds` with one-hot targets, and its gradient in
/// [`MlpModel::params`] order.
pub fn sse_and_gradient(model: &MlpModel, ds: &Dataset) -> Result<(f64, Vec<f64>)> {
    let (p, q, c) = (model.n_inputs, model.n_hidden, model.n_outputs);
    if ds.n_features() != p {
        return Err(Error::DimensionMismatch { expected: p, found: ds.n_features() });
    }
    if ds.n_classes() != c {
        return Err(Error::InvalidParameter(format!("model has {c} outputs, data has {} classes", ds.n_classes())));
    }
    let mut g_hw = vec![vec![0.0; p]; q];
    let mut g_hb = vec![0.0; q];
    let mut g_ow = vec![vec![0.0; q]; c];
    let mut g_ob = vec![0.0; c];
    let mut sse = 0.0;
    for (x, &label) in ds.rows().zip(ds.labels()) {
        let h = model.hidden(x);
        let y = model.outputs(&h);
        let delta: Vec<f64> = y.iter().enumerate().map(|(k, &v)| v - f64::from(u8::from(k == label))).collect();
        sse += 0.5 * delta.iter().map(|d| d * d).sum::<f64>();
        for k in 0..c {
            g_ob[k] += delta[k];
            for j in 0..q {
                g_ow[k][j] += delta[k] * h[j];
            }
        }
        for j in 0..q {
            let back: f64 = (0..c).map(|k| delta[k] * model.output_weights[k][j]).sum();
            let dh = back * h[j] * (1.0 - h[j]);
            g_hb[j] += dh;
            for i in 0..p {
                g_hw[j][i] += dh * x[i];
            }
        }
    }
    let mut grad = Vec::with_capacity(model.n_params());
    g_hw.iter().for_each(|r| grad.extend_from_slice(r));
    grad.extend_from_slice(&g_hb);
    g_ow.iter().for_each(|r| grad.extend_from_slice(r));
    grad.extend_from_slice(&g_ob);
    Ok((sse, grad))
}

pub fn fit_mlp(ds: &Dataset, config: &MlpConfig) -> Result<(MlpModel, TrainTrace)> {
    if config.hidden == 0 {
        return Err(Error::InvalidParameter("hidden layer needs at least one unit".into()));
    }
    if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidParameter(format!("learning rate {}", config.learning_rate)));
    }
    let mut model = MlpModel::zeros(ds.n_features(), config.hidden, ds.n_classes());
    let mut rng = seed::rng(config.seed);
    let s = config.init_scale.abs();
    let init: Vec<f64> = (0..model.n_params())
        .map(|_| if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 })
        .collect();
    model.set_params(&init)?;

    let mut params = init;
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (sse, grad) = sse_and_gradient(&model, ds)?;
        if !sse.is_finite() {
            return Err(Error::NonFiniteLoss(epoch));
        }
        let stalled = trace.last().is_some_and(|&prev: &f64| prev - sse < config.min_improvement);
        trace.push(sse);
        if stalled {
            break;
        }
        for (w, g) in params.iter_mut().zip(&grad) {
            *w -= config.learning_rate * g;
        }
        model.set_params(&params)?;
    }
    let steps = trace.len();
    Ok((model, TrainTrace { sse: trace, steps }))
}
