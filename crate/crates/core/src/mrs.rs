//! Training-free fitness from random weight sampling.
//!
//! An architecture is scored by drawing `num_samples` weight vectors from a normal
//! distribution, measuring the MAE of each on the training windows, fitting a normal
//! to those errors and reading off the probability mass below the threshold `t`.
//! Because an MAE cannot be negative, the fitted normal is truncated at zero:
//!
//! ```text
//! p_t = (Φ((t − μ̂)/σ̂) − Φ(−μ̂/σ̂)) / (1 − Φ(−μ̂/σ̂))
//! ```

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::WindowedSet;
use crate::rnn::{self, Architecture, WeightVector};
use crate::seed;
use crate::train::mae;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MrsConfig {
    pub num_samples: usize,
    /// Error threshold `t`. `None` uses the MAE of the last-value predictor on the
    /// windows being scored.
    pub threshold: Option<f64>,
    pub weight_mean: f64,
    pub weight_sd: f64,
    pub seed: u64,
}

impl Default for MrsConfig {
    fn default() -> Self {
        Self {
            num_samples: 100,
            threshold: None,
            weight_mean: 0.0,
            weight_sd: 1.0,
            seed: 0,
        }
    }
}

impl MrsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 2 {
            return Err(Error::invalid(format!(
                "num_samples must be at least 2, got {}",
                self.num_samples
            )));
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0) {
                return Err(Error::invalid(format!(
                    "threshold must be positive, got {t}"
                )));
            }
        }
        if !(self.weight_sd > 0.0) || !self.weight_mean.is_finite() {
            return Err(Error::invalid(
                "weight_sd must be positive and weight_mean finite",
            ));
        }
        Ok(())
    }

    /// The threshold used when scoring against `train`.
    pub fn resolve_threshold(&self, train: &WindowedSet) -> Result<f64> {
        match self.threshold {
            Some(t) => Ok(t),
            None => {
                let t = last_value_mae(train);
                if t > 0.0 {
                    Ok(t)
                } else {
                    Err(Error::invalid(
                        "the last-value predictor is exact on this series; set an explicit threshold",
                    ))
                }
            }
        }
    }
}

/// MAE of predicting each target by the last value of its window.
pub fn last_value_mae(windowed: &WindowedSet) -> f64 {
    let lb = windowed.look_back();
    let total: f64 = windowed
        .inputs()
        .zip(windowed.targets())
        .map(|(x, y)| (x[lb - 1] - y).abs())
        .sum();
    total / windowed.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrsResult {
    pub maes: Vec<f64>,
    pub mean_mae: f64,
    pub sd_mae: f64,
    pub threshold: f64,
    pub p_t: f64,
}

/// The `s`-th random weight vector for `arch`, drawn from the stream `(cfg.seed, s)`.
pub fn sample_weights(arch: &Architecture, cfg: &MrsConfig, s: usize) -> Result<WeightVector> {
    let dist =
        Normal::new(cfg.weight_mean, cfg.weight_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = seed::rng_for(cfg.seed, s as u64);
    Ok(dist
        .sample_iter(&mut rng)
        .take(arch.weight_count())
        .collect::<Vec<f64>>()
        .into())
}

/// MAE on `train` of each of the `cfg.num_samples` random weight vectors, in sample order.
///
/// Samples are evaluated in parallel; each depends only on its own seed so the output
/// equals a sequential evaluation.
pub fn sample_maes(arch: &Architecture, train: &WindowedSet, cfg: &MrsConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("cannot score on an empty training set"));
    }
    (0..cfg.num_samples)
        .into_par_iter()
        .map(|s| {
            let weights = sample_weights(arch, cfg, s)?;
            let predictions = rnn::predict_series(arch, &weights, train)?;
            mae(train.targets(), &predictions)
        })
        .collect()
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Zero-truncated normal estimate of `P(MAE ≤ threshold)` from sampled errors.
pub fn estimate_pt(maes: &[f64], threshold: f64) -> Result<f64> {
    if maes.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 sampled errors, got {}",
            maes.len()
        )));
    }
    if !(threshold > 0.0) {
        return Err(Error::invalid(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    if maes.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("sampled errors must be finite".into()));
    }
    let (mu, sd) = mean_and_sd(maes);
    Ok(truncated_cdf(threshold, mu, sd))
}

fn truncated_cdf(t: f64, mu: f64, sd: f64) -> f64 {
    if !(sd > 0.0) {
        return if mu <= t { 1.0 } else { 0.0 };
    }
    let lower = normal_cdf(-mu / sd);
    let upper = normal_cdf((t - mu) / sd);
    // 1 − Φ(−μ/σ) written as Φ(μ/σ) to keep precision in the tail
    let mass = normal_cdf(mu / sd);
    if mass <= 0.0 {
        return if mu <= t { 1.0 } else { 0.0 };
    }
    ((upper - lower) / mass).clamp(0.0, 1.0)
}

/// Full scoring of one architecture: sampled errors, their moments and `p_t`.
pub fn evaluate(arch: &Architecture, train: &WindowedSet, cfg: &MrsConfig) -> Result<MrsResult> {
    let threshold = cfg.resolve_threshold(train)?;
    let maes = sample_maes(arch, train, cfg)?;
    let p_t = estimate_pt(&maes, threshold)?;
    let (mean_mae, sd_mae) = mean_and_sd(&maes);
    Ok(MrsResult {
        maes,
        mean_mae,
        sd_mae,
        threshold,
        p_t,
    })
}

/// `p_t` of `arch` on `train`.
pub fn fitness(arch: &Architecture, train: &WindowedSet, cfg: &MrsConfig) -> Result<f64> {
    Ok(evaluate(arch, train, cfg)?.p_t)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function.
///
/// Uses the positive-term series of `erf` below 2 and a continued fraction above,
/// which keeps the relative error near machine precision in both tails.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else if x > 27.0 {
        0.0
    } else {
        erfc_continued_fraction(x)
    }
}

// erf(x) = 2/√π · e^{−x²} · Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= 2.0 * x2 / (2 * n + 1) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    std::f64::consts::FRAC_2_SQRT_PI * (-x2).exp() * sum
}

// erfc(x) = e^{−x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))
fn erfc_continued_fraction(x: f64) -> f64 {
    let mut tail = x;
    for n in (1..=120).rev() {
        tail = x + (n as f64 / 2.0) / tail;
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Φ by composite Simpson quadrature of the density from 0 to |x|.
    fn phi_quadrature(x: f64) -> f64 {
        let pdf = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let n = 20_000;
        let a = x.abs();
        let h = a / n as f64;
        let mut s = pdf(0.0) + pdf(a);
        for k in 1..n {
            s += pdf(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let half = s * h / 3.0;
        if x >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }

    #[test]
    fn cdf_matches_quadrature_on_grid() {
        let mut x = -6.0;
        while x <= 6.0 + 1e-9 {
            let diff = (normal_cdf(x) - phi_quadrature(x)).abs();
            assert!(diff <= 1e-7, "x={x}: diff {diff}");
            x += 0.05;
        }
    }

    #[test]
    fn erfc_branches_agree_at_switch() {
        let below = 1.0 - erf_series(2.0);
        let above = erfc_continued_fraction(2.0);
        assert!(((below - above) / above).abs() < 1e-12);
        assert_eq!(erfc(0.0), 1.0);
        assert!((erfc(-1.0) + erfc(1.0) - 2.0).abs() < 1e-15);
        // left tail keeps relative precision
        let tail = normal_cdf(-8.0);
        assert!((tail / 6.220_960_574_271_78e-16 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_spread() {
        assert_eq!(estimate_pt(&[0.3, 0.3, 0.3], 0.5).unwrap(), 1.0);
        assert_eq!(estimate_pt(&[0.7, 0.7], 0.5).unwrap(), 0.0);
    }

    #[test]
    fn two_point_example() {
        // μ = 1, σ = √0.5; reference from the quadrature Φ
        let (mu, sd) = (1.0_f64, 0.5_f64.sqrt());
        let lower = phi_quadrature(-mu / sd);
        let oracle = (phi_quadrature(0.0) - lower) / (1.0 - lower);
        assert!((oracle - 0.45732).abs() < 5e-6, "oracle {oracle}");
        let p = estimate_pt(&[0.5, 1.5], 1.0).unwrap();
        assert!((p - oracle).abs() < 1e-9, "{p} vs {oracle}");
    }

    #[test]
    fn threshold_near_zero() {
        let maes = [0.2, 0.5, 0.9, 1.4];
        let p = estimate_pt(&maes, 1e-12).unwrap();
        assert!(p < 1e-9);
        assert!(estimate_pt(&maes, 0.0).is_err());
        assert!(estimate_pt(&maes[..1], 0.5).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(MrsConfig {
            num_samples: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(MrsConfig {
            threshold: Some(-1.0),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(MrsConfig::default().validate().is_ok());
    }

    #[test]
    fn last_value_threshold() {
        let w = WindowedSet::from_series(&[0.0, 0.5, 0.0, 0.5], 1).unwrap();
        assert_eq!(last_value_mae(&w), 0.5);
        let cfg = MrsConfig::default();
        assert_eq!(cfg.resolve_threshold(&w).unwrap(), 0.5);
        let flat = WindowedSet::from_series(&[1.0, 1.0, 1.0], 1).unwrap();
        assert!(cfg.resolve_threshold(&flat).is_err());
    }
}
