//! JSON run configuration and flag-value parsers.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pyrokin::kinetics::AnalysisConfig;
use pyrokin::preprocess::{default_stage_windows, Stage, StageWindow};
use pyrokin::seqmodel::{FeatureMode, SearchSpace, SplitFractions, TrainConfig};

use crate::failure::{config_err, ConfigError};

/// Settings for the sequence-model commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceConfig {
    pub mode: FeatureMode,
    /// Curves are resampled to this step (K) before windowing.
    pub resample_step: f64,
    pub split: SplitFractions,
    /// Curve ids (`sample@beta`) withheld from training.
    pub holdout: Vec<String>,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig { mode: FeatureMode::Model2, resample_step: 5.0, split: SplitFractions::default(), holdout: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub analysis: AnalysisConfig,
    /// Stage windows in °C, keyed by stage name.
    pub stage_windows: Vec<StageWindowC>,
    pub sequence: SequenceConfig,
    pub train: TrainConfig,
    pub search: SearchSpace,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            analysis: AnalysisConfig::default(),
            stage_windows: default_stage_windows().iter().map(StageWindowC::from_window).collect(),
            sequence: SequenceConfig::default(),
            train: TrainConfig::default(),
            search: SearchSpace::reference(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageWindowC {
    pub stage: Stage,
    pub lo_c: f64,
    pub hi_c: f64,
}

impl StageWindowC {
    fn from_window(w: &StageWindow) -> Self {
        StageWindowC {
            stage: w.stage,
            lo_c: pyrokin::constants::kelvin_to_celsius(w.lo_k),
            hi_c: pyrokin::constants::kelvin_to_celsius(w.hi_k),
        }
    }

    pub fn to_window(self) -> StageWindow {
        StageWindow::celsius(self.stage, self.lo_c, self.hi_c)
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(RunConfig::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("config {}: {e}", path.display())).into())
    }

    /// SHA-256 of the effective configuration's canonical JSON.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config always serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn windows(&self) -> Vec<StageWindow> {
        self.stage_windows.iter().map(|w| w.to_window()).collect()
    }
}

/// `lo:hi:step`, inclusive of `hi` up to rounding.
pub fn parse_alpha_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| config_err(format!("alpha grid {s:?}: expected lo:hi:step")))?;
    let [lo, hi, step] = nums[..] else {
        return Err(config_err(format!("alpha grid {s:?}: expected lo:hi:step")));
    };
    if !(lo > 0.0 && hi < 1.0 && lo <= hi && step > 0.0) {
        return Err(config_err(format!("alpha grid {s:?}: need 0 < lo ≤ hi < 1 and step > 0")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    // rounded to 10 decimals so 0.1 + 2·0.1 prints as 0.3
    Ok((0..=n).map(|k| ((lo + k as f64 * step) * 1e10).round() / 1e10).collect())
}

/// Comma-separated list of numbers.
pub fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| config_err(format!("{what}: {p:?} is not a number"))))
        .collect()
}

/// `stage=lo:hi,...` in °C, replacing the windows of the named stages.
pub fn apply_stage_windows(current: &mut Vec<StageWindowC>, s: &str) -> Result<()> {
    for item in s.split(',').filter(|x| !x.trim().is_empty()) {
        let (name, range) = item
            .split_once('=')
            .ok_or_else(|| config_err(format!("stage window {item:?}: expected stage=lo:hi")))?;
        let stage = Stage::parse(name).ok_or_else(|| config_err(format!("unknown stage {name:?}")))?;
        let bounds = parse_list(&range.replace(':', ","), "stage window")?;
        let [lo_c, hi_c] = bounds[..] else {
            return Err(config_err(format!("stage window {item:?}: expected stage=lo:hi")));
        };
        if !(lo_c < hi_c) {
            return Err(config_err(format!("stage window {item:?}: lo must be below hi")));
        }
        current.retain(|w| w.stage != stage);
        current.push(StageWindowC { stage, lo_c, hi_c });
    }
    current.sort_by_key(|w| w.stage);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_grid_counts() {
        let g = parse_alpha_grid("0.1:0.7:0.1").unwrap();
        assert_eq!(g, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]);
        assert!(parse_alpha_grid("0.1:0.7").is_err());
        assert!(parse_alpha_grid("0:0.7:0.1").is_err());
    }

    #[test]
    fn stage_override() {
        let mut w = RunConfig::default().stage_windows;
        apply_stage_windows(&mut w, "cellulose=300:420").unwrap();
        let c = w.iter().find(|x| x.stage == Stage::Cellulose).unwrap();
        assert_eq!((c.lo_c, c.hi_c), (300.0, 420.0));
        assert_eq!(w.len(), 4);
        assert!(apply_stage_windows(&mut w, "bark=1:2").is_err());
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = RunConfig::default();
        assert_eq!(a.digest(), RunConfig::default().digest());
        let mut b = a.clone();
        b.train.epochs = 11;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"train": {"hidden_units": 8}}"#).unwrap();
        assert_eq!(c.train.hidden_units, 8);
        assert_eq!(c.train.look_back, 20);
        assert!(serde_json::from_str::<RunConfig>(r#"{"trian": {}}"#).is_err());
    }
}
