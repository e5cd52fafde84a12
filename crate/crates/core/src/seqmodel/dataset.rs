//! Look-back windows, dataset splitting and min-max scaling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureRow;
use crate::error::{Error, Result};

/// `look_back` consecutive feature vectors and the mass % of the row that
/// follows them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSample {
    pub curve_id: String,
    pub window: Vec<Vec<f64>>,
    pub target: f64,
    /// Temperature of the target row, °C.
    pub temperature_c: f64,
}

/// Slides a window over each curve. A curve with n rows gives
/// `max(0, n − look_back)` samples; windows never cross curves. Rows are
/// grouped by `curve_id` in order of first appearance.
pub fn window_sequences(rows: &[FeatureRow], look_back: usize) -> Result<Vec<SequenceSample>> {
    if look_back == 0 {
        return Err(Error::Config("look-back must be at least 1".into()));
    }
    let mut groups: Vec<(&str, Vec<&FeatureRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(id, _)| *id == r.curve_id) {
            Some((_, g)) => g.push(r),
            None => groups.push((&r.curve_id, vec![r])),
        }
    }
    let mut out = Vec::new();
    for (id, g) in groups {
        let feats: Vec<Vec<f64>> = g.iter().map(|r| r.features()).collect();
        for k in 0..g.len().saturating_sub(look_back) {
            let next = g[k + look_back];
            out.push(SequenceSample {
                curve_id: id.to_string(),
                window: feats[k..k + look_back].to_vec(),
                target: next.mass_pct,
                temperature_c: next.temperature_c,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions { train: 0.70, val: 0.15, test: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetSplit {
    pub train: Vec<SequenceSample>,
    pub val: Vec<SequenceSample>,
    /// In-distribution remainder of the shuffled pool.
    pub test: Vec<SequenceSample>,
    /// Whole curves withheld from training; the final generalization test.
    pub holdout: Vec<SequenceSample>,
}

/// Withholds `holdout_curves` entirely, then shuffles the rest with `seed`
/// and cuts it by `fractions`.
pub fn split_dataset(
    samples: Vec<SequenceSample>,
    fractions: SplitFractions,
    holdout_curves: &[String],
    seed: u64,
) -> Result<DatasetSplit> {
    let f = fractions;
    if [f.train, f.val, f.test].iter().any(|v| !(0.0..=1.0).contains(v))
        || (f.train + f.val + f.test - 1.0).abs() > 1e-9
    {
        return Err(Error::Config(format!("split fractions {f:?} must be in [0, 1] and sum to 1")));
    }
    let (holdout, mut pool): (Vec<_>, Vec<_>) =
        samples.into_iter().partition(|s| holdout_curves.contains(&s.curve_id));
    if pool.is_empty() {
        return Err(Error::Input("holdout covers every curve; nothing left to train on".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let n = pool.len();
    let n_train = ((n as f64 * f.train).round() as usize).min(n);
    let n_val = ((n as f64 * f.val).round() as usize).min(n - n_train);
    if n_train == 0 {
        return Err(Error::Input("training split is empty".into()));
    }
    let test = pool.split_off(n_train + n_val);
    let val = pool.split_off(n_train);
    Ok(DatasetSplit { train: pool, val, test, holdout })
}

/// Per-feature min-max scaling plus target scaling, fit on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub feature_min: Vec<f64>,
    pub feature_max: Vec<f64>,
    pub target_min: f64,
    pub target_max: f64,
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    // a constant feature would divide by zero; give it a unit range
    if hi - lo > 1e-12 * lo.abs().max(1.0) {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

impl Scaler {
    pub fn identity(n_features: usize) -> Self {
        Scaler {
            feature_min: vec![0.0; n_features],
            feature_max: vec![1.0; n_features],
            target_min: 0.0,
            target_max: 1.0,
        }
    }

    pub fn fit(samples: &[SequenceSample]) -> Result<Self> {
        let first = samples
            .first()
            .and_then(|s| s.window.first())
            .ok_or_else(|| Error::Input("cannot fit a scaler on no data".into()))?;
        let nf = first.len();
        let mut lo = vec![f64::INFINITY; nf];
        let mut hi = vec![f64::NEG_INFINITY; nf];
        let (mut tlo, mut thi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in samples {
            for v in &s.window {
                if v.len() != nf {
                    return Err(Error::Input("inconsistent feature counts".into()));
                }
                for (j, x) in v.iter().enumerate() {
                    lo[j] = lo[j].min(*x);
                    hi[j] = hi[j].max(*x);
                }
            }
            tlo = tlo.min(s.target);
            thi = thi.max(s.target);
        }
        let (feature_min, feature_max) = lo.iter().zip(&hi).map(|(&a, &b)| widen(a, b)).unzip();
        let (target_min, target_max) = widen(tlo, thi);
        Ok(Scaler { feature_min, feature_max, target_min, target_max })
    }

    pub fn n_features(&self) -> usize {
        self.feature_min.len()
    }

    pub fn scale_feature(&self, j: usize, x: f64) -> f64 {
        (x - self.feature_min[j]) / (self.feature_max[j] - self.feature_min[j])
    }

    pub fn unscale_feature(&self, j: usize, x: f64) -> f64 {
        self.feature_min[j] + x * (self.feature_max[j] - self.feature_min[j])
    }

    pub fn scale_target(&self, y: f64) -> f64 {
        (y - self.target_min) / (self.target_max - self.target_min)
    }

    pub fn unscale_target(&self, y: f64) -> f64 {
        self.target_min + y * (self.target_max - self.target_min)
    }

    /// Window flattened time-major and scaled; values outside the training
    /// range map outside [0, 1] and are not clamped.
    pub fn scale_window(&self, window: &[Vec<f64>]) -> Vec<f64> {
        window
            .iter()
            .flat_map(|v| v.iter().enumerate().map(|(j, &x)| self.scale_feature(j, x)))
            .collect()
    }
}
