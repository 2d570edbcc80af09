//! Evaluation metrics and the per-sample losses the booster optimizes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Logistic,
    Squared,
}

/// Per-sample loss at raw score `raw` for target `y`.
/// Squared: `0.5 * (raw - y)^2`. Logistic (y in {0,1}): `softplus(raw) - y*raw`,
/// computed stably as `max(raw, 0) + ln(1 + exp(-|raw|)) - y*raw`.
pub fn loss_value(loss: Loss, raw: f64, y: f64) -> f64 {
    match loss {
        Loss::Squared => 0.5 * (raw - y) * (raw - y),
        Loss::Logistic => raw.max(0.0) + (-raw.abs()).exp().ln_1p() - y * raw,
    }
}

/// Analytic derivative of [`loss_value`] with respect to the raw score.
pub fn loss_gradient(loss: Loss, raw: f64, y: f64) -> f64 {
    match loss {
        Loss::Squared => raw - y,
        Loss::Logistic => sigmoid(raw) - y,
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fraction of positions where the two label sequences agree.
pub fn accuracy<T: PartialEq>(predicted: &[T], truth: &[T]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    assert!(!predicted.is_empty());
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / predicted.len() as f64
}

/// Scale statistic used to normalize the RMSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NrmseNormalizer {
    #[default]
    Std,
    Range,
    Mean,
}

pub fn rmse(predicted: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    assert!(!predicted.is_empty());
    let n = predicted.len() as f64;
    (predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
        .sqrt()
}

/// RMSE divided by the chosen scale statistic of `truth` (population std by
/// default). Returns `(value, degenerate)`; when the normalizer is zero the
/// RMSE is returned unnormalized and the flag is set.
pub fn nrmse_with(predicted: &[f64], truth: &[f64], normalizer: NrmseNormalizer) -> (f64, bool) {
    let raw = rmse(predicted, truth);
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let scale = match normalizer {
        NrmseNormalizer::Std => {
            (truth.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n).sqrt()
        }
        NrmseNormalizer::Range => {
            let min = truth.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = truth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            max - min
        }
        NrmseNormalizer::Mean => mean.abs(),
    };
    if scale == 0.0 {
        (raw, true)
    } else {
        (raw / scale, false)
    }
}

/// RMSE over the population standard deviation of `truth`.
pub fn nrmse(predicted: &[f64], truth: &[f64]) -> f64 {
    nrmse_with(predicted, truth, NrmseNormalizer::Std).0
}
