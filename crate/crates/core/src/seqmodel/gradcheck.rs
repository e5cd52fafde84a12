//! Analytic-vs-finite-difference check of the BPTT gradients.

use serde::{Deserialize, Serialize};

use super::dataset::SequenceSample;
use super::lstm::LstmModel;
use crate::error::{Error, Result};

/// Denominator floor for the relative error so that parameters with a
/// vanishing gradient are compared absolutely.
const REL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub tensors: Vec<TensorCheck>,
    pub max_rel_error: f64,
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Compares the gradient of `(y − target)²` (scaled units, as stored in the
/// sample) against central differences for every parameter.
///
/// `training_mode` asks for the check with dropout active, which cannot be
/// reproduced between perturbations; it is refused unless dropout is zero.
pub fn gradient_check(model: &LstmModel, sample: &SequenceSample, epsilon: f64, training_mode: bool) -> Result<GradientReport> {
    if training_mode && model.config.dropout > 0.0 {
        return Err(Error::Precondition(
            "gradient check needs deterministic forward passes; set dropout to 0 or disable training mode".into(),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon {epsilon} must be > 0")));
    }
    if sample.window.len() != model.config.look_back {
        return Err(Error::Input("sample window does not match look_back".into()));
    }
    let x = model.scaler.scale_window(&sample.window);
    let target = model.scaler.scale_target(sample.target);

    let mut analytic = vec![0.0; model.param_count()];
    model.accumulate_gradient(&x, target, 1.0, None, &mut analytic);

    let loss = |m: &LstmModel| {
        let e = m.forward_cached(&x, None).output - target;
        e * e
    };
    let mut probe = model.clone();
    let mut tensors = Vec::new();
    for info in model.tensors() {
        let mut rel: f64 = 0.0;
        let mut abs: f64 = 0.0;
        for k in info.offset..info.offset + info.len() {
            let w = probe.params()[k];
            probe.params_mut()[k] = w + epsilon;
            let up = loss(&probe);
            probe.params_mut()[k] = w - epsilon;
            let down = loss(&probe);
            probe.params_mut()[k] = w;
            let numeric = (up - down) / (2.0 * epsilon);
            rel = rel.max(relative(analytic[k], numeric));
            abs = abs.max((analytic[k] - numeric).abs());
        }
        tensors.push(TensorCheck { name: info.name, max_rel_error: rel, max_abs_error: abs });
    }
    let max_rel_error = tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max);
    Ok(GradientReport { tensors, max_rel_error })
}

/// Gradient of the squared error with respect to the dense bias alone.
pub fn dense_bias_gradient(model: &LstmModel, sample: &SequenceSample) -> Result<f64> {
    let x = model.scaler.scale_window(&sample.window);
    let target = model.scaler.scale_target(sample.target);
    let mut g = vec![0.0; model.param_count()];
    model.accumulate_gradient(&x, target, 1.0, None, &mut g);
    let info = model
        .tensors()
        .into_iter()
        .find(|t| t.name == "dense.b")
        .ok_or_else(|| Error::Precondition("model has no dense bias".into()))?;
    Ok(g[info.offset])
}
