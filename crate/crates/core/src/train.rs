//! Full-batch Adam training with gradients from backpropagation through time.

use std::time::Instant;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::WindowedSet;
use crate::rnn::{self, kernel, Architecture, WeightVector};
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 1000,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.epochs >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "invalid Adam configuration {self:?}"
            )))
        }
    }
}

/// First and second moment estimates plus the number of steps taken.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    weights: &mut [f64],
    gradient: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    let n = weights.len();
    for (what, len) in [
        ("gradient", gradient.len()),
        ("first moment", state.m.len()),
        ("second moment", state.v.len()),
    ] {
        if len != n {
            return Err(Error::shape(what, n, len));
        }
    }
    state.step += 1;
    let k = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(k);
    let c2 = 1.0 - cfg.beta2.powi(k);
    for i in 0..n {
        let g = gradient[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        weights[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

fn check_shapes(arch: &Architecture, weights: &WeightVector, windowed: &WindowedSet) -> Result<()> {
    rnn::check_weights(arch, weights)?;
    if windowed.look_back() != arch.look_back() {
        return Err(Error::shape(
            "windowed look_back",
            arch.look_back(),
            windowed.look_back(),
        ));
    }
    if windowed.is_empty() {
        return Err(Error::invalid("cannot train on an empty windowed set"));
    }
    Ok(())
}

struct Evaluation {
    loss: f64,
    gradient: Vec<f64>,
    predictions: Vec<f64>,
}

fn evaluate(arch: &Architecture, weights: &[f64], windowed: &WindowedSet) -> Evaluation {
    let batch = windowed.len();
    let x = windowed.flat_inputs();
    let fwd = kernel::forward_batch(arch, weights, x, batch, true);
    let scale = 2.0 / batch as f64;
    let mut loss = 0.0;
    let d_pred: Vec<f64> = fwd
        .predictions
        .iter()
        .zip(windowed.targets())
        .map(|(p, y)| {
            let r = p - y;
            loss += r * r;
            scale * r
        })
        .collect();
    let gradient = kernel::backward_batch(weights, x, &fwd, &d_pred);
    Evaluation {
        loss: loss / batch as f64,
        gradient,
        predictions: fwd.predictions,
    }
}

/// MSE over all pairs and its gradient with respect to every weight.
pub fn loss_and_gradient(
    arch: &Architecture,
    weights: &WeightVector,
    windowed: &WindowedSet,
) -> Result<(f64, Vec<f64>)> {
    check_shapes(arch, weights, windowed)?;
    let e = evaluate(arch, weights.as_slice(), windowed);
    Ok((e.loss, e.gradient))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub final_weights: WeightVector,
    /// Training MAE after each epoch.
    pub loss_history: Vec<f64>,
    pub wall_time_seconds: f64,
}

/// Full-batch Adam on the MSE loss for `cfg.epochs` epochs.
pub fn train_adam(
    arch: &Architecture,
    init_weights: &WeightVector,
    train: &WindowedSet,
    cfg: &AdamConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    check_shapes(arch, init_weights, train)?;
    let start = Instant::now();
    let mut weights = init_weights.as_slice().to_vec();
    let mut state = AdamState::new(weights.len());
    let mut loss_history = Vec::with_capacity(cfg.epochs);

    // the forward pass of each epoch doubles as the post-epoch MAE of the previous one
    for epoch in 0..cfg.epochs {
        let e = evaluate(arch, &weights, train);
        if epoch > 0 {
            loss_history.push(mae(train.targets(), &e.predictions)?);
        }
        adam_step(&mut weights, &e.gradient, &mut state, cfg)?;
    }
    let weights = WeightVector::from(weights);
    let last = rnn::predict_series(arch, &weights, train)?;
    loss_history.push(mae(train.targets(), &last)?);

    Ok(TrainReport {
        final_weights: weights,
        loss_history,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Weights drawn i.i.d. from `normal(0, sd²)` on the stream `(seed, 0)`.
pub fn init_weights(arch: &Architecture, sd: f64, seed: u64) -> Result<WeightVector> {
    let dist = Normal::new(0.0, sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = seed::rng_for(seed, 0);
    Ok(dist
        .sample_iter(&mut rng)
        .take(arch.weight_count())
        .collect::<Vec<f64>>()
        .into())
}

fn check_metric_inputs(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::shape("metric inputs", y.len(), yhat.len()));
    }
    if y.is_empty() {
        return Err(Error::invalid("metrics need at least one value"));
    }
    Ok(())
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_metric_inputs(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_metric_inputs(y, yhat)?;
    Ok(y.iter()
        .zip(yhat)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / y.len() as f64)
}

/// Mean absolute percentage error, in percent.
pub fn mape(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_metric_inputs(y, yhat)?;
    if let Some(k) = y.iter().position(|&v| v == 0.0) {
        return Err(Error::invalid(format!(
            "MAPE undefined: target {k} is zero"
        )));
    }
    Ok(100.0
        * y.iter()
            .zip(yhat)
            .map(|(a, b)| ((a - b) / a).abs())
            .sum::<f64>()
        / y.len() as f64)
}
