//! Regression error metrics in unscaled target units (mass %).

use serde::{Deserialize, Serialize};

use super::dataset::SequenceSample;
use super::lstm::LstmModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// With constant targets R² is undefined; it is reported as 1 for an exact
/// fit and 0 otherwise.
pub fn metrics(actual: &[f64], predicted: &[f64]) -> Result<EvalMetrics> {
    if actual.is_empty() {
        return Err(Error::EmptyInput);
    }
    if actual.len() != predicted.len() {
        return Err(Error::Input(format!("{} targets but {} predictions", actual.len(), predicted.len())));
    }
    let n = actual.len();
    let nf = n as f64;
    let mean = actual.iter().sum::<f64>() / nf;
    let (mut abs, mut ss_res, mut ss_tot) = (0.0, 0.0, 0.0);
    for (a, p) in actual.iter().zip(predicted) {
        let e = p - a;
        abs += e.abs();
        ss_res += e * e;
        ss_tot += (a - mean) * (a - mean);
    }
    let mse = ss_res / nf;
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(EvalMetrics { mae: abs / nf, mse, rmse: mse.sqrt(), r_squared, n })
}

/// Inference-mode predictions in mass %.
pub fn predict_all(model: &LstmModel, samples: &[SequenceSample]) -> Result<Vec<f64>> {
    samples.iter().map(|s| model.predict(s)).collect()
}

pub fn evaluate(model: &LstmModel, test: &[SequenceSample]) -> Result<EvalMetrics> {
    let pred = predict_all(model, test)?;
    let actual: Vec<f64> = test.iter().map(|s| s.target).collect();
    metrics(&actual, &pred)
}

/// Metrics per curve, in order of first appearance.
pub fn evaluate_by_curve(model: &LstmModel, test: &[SequenceSample]) -> Result<Vec<(String, EvalMetrics)>> {
    let mut ids: Vec<&str> = Vec::new();
    for s in test {
        if !ids.contains(&s.curve_id.as_str()) {
            ids.push(&s.curve_id);
        }
    }
    ids.into_iter()
        .map(|id| {
            let subset: Vec<SequenceSample> = test.iter().filter(|s| s.curve_id == id).cloned().collect();
            Ok((id.to_string(), evaluate(model, &subset)?))
        })
        .collect()
}
