//! JSON model checkpoints.
//!
//! Shapes: per layer `w_x` is `4H × input` and `w_h` is `4H × H`, rows in
//! gate order `[i, f, o, g]`, row-major; `bias` has `4H` entries; the dense
//! head has `H` weights and one bias.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::Scaler;
use super::features::FeatureMode;
use super::lstm::LstmModel;
use super::train::TrainConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub w_x: Vec<Vec<f64>>,
    pub w_h: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseWeights {
    pub w: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: TrainConfig,
    pub feature_mode: FeatureMode,
    /// Grid step (K) the training curves were resampled to.
    pub resample_step: f64,
    pub n_features: usize,
    pub scaler: Scaler,
    pub layers: Vec<LayerWeights>,
    pub dense: DenseWeights,
}

impl Checkpoint {
    pub fn from_model(model: &LstmModel, feature_mode: FeatureMode, resample_step: f64) -> Self {
        let (w, b) = model.dense_weights();
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config: model.config.clone(),
            feature_mode,
            resample_step,
            n_features: model.n_features,
            scaler: model.scaler.clone(),
            layers: model.layer_weights().into_iter().map(|(w_x, w_h, bias)| LayerWeights { w_x, w_h, bias }).collect(),
            dense: DenseWeights { w, b },
        }
    }

    pub fn to_model(&self) -> Result<LstmModel> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Input(format!("unsupported checkpoint version {}", self.version)));
        }
        if self.n_features != self.feature_mode.feature_count() {
            return Err(Error::Input(format!(
                "checkpoint declares {} features but {} uses {}",
                self.n_features,
                self.feature_mode.label(),
                self.feature_mode.feature_count()
            )));
        }
        let layers: Vec<_> = self.layers.iter().map(|l| (l.w_x.clone(), l.w_h.clone(), l.bias.clone())).collect();
        LstmModel::from_weights(&self.config, self.n_features, self.scaler.clone(), &layers, (&self.dense.w, self.dense.b))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqmodel::dataset::SequenceSample;

    #[test]
    fn json_round_trip_is_bitwise() {
        let cfg = TrainConfig { hidden_units: 3, lstm_layers: 2, look_back: 4, ..TrainConfig::default() };
        let mut m = LstmModel::new(&cfg, 4).unwrap();
        m.scaler.target_max = 101.3;
        let ck = Checkpoint::from_model(&m, FeatureMode::Model1, 0.5);
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap().to_model().unwrap();
        assert_eq!(back, m);
        let s = SequenceSample { curve_id: "c".into(), window: vec![vec![0.3, 0.1, 0.7, 0.2]; 4], target: 1.0, temperature_c: 0.0 };
        assert_eq!(back.predict(&s).unwrap().to_bits(), m.predict(&s).unwrap().to_bits());
    }

    #[test]
    fn shape_errors_are_reported() {
        let cfg = TrainConfig { hidden_units: 2, lstm_layers: 1, look_back: 2, ..TrainConfig::default() };
        let m = LstmModel::new(&cfg, 7).unwrap();
        let mut ck = Checkpoint::from_model(&m, FeatureMode::Model2, 0.5);
        ck.layers[0].w_h.pop();
        assert!(ck.to_model().is_err());
        let mut ck2 = Checkpoint::from_model(&m, FeatureMode::Model1, 0.5);
        ck2.version = 1;
        assert!(ck2.to_model().is_err());
    }
}
