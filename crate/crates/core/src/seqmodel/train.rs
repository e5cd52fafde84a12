//! Mini-batch training with early stopping on validation loss.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Scaler, SequenceSample};
use super::lstm::{Activation, LstmModel};
use super::optim::{Optimizer, OptimizerKind};
use crate::error::{Error, Result};

pub const DEFAULT_LOOK_BACK: usize = 20;
pub const DEFAULT_PATIENCE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout: f64,
    pub hidden_units: usize,
    pub lstm_layers: usize,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
    pub look_back: usize,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 32,
            epochs: 30,
            dropout: 0.1,
            hidden_units: 64,
            lstm_layers: 2,
            activation: Activation::Tanh,
            optimizer: OptimizerKind::Adam,
            look_back: DEFAULT_LOOK_BACK,
            early_stop_patience: DEFAULT_PATIENCE,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Structural checks only; see [`TrainConfig::reference_range_violations`]
    /// for the tuning ranges.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be > 0", self.learning_rate));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.hidden_units == 0 || self.lstm_layers == 0 {
            return bad("batch_size, epochs, hidden_units and lstm_layers must be ≥ 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} must be in [0, 1)", self.dropout));
        }
        if self.look_back == 0 {
            return bad("look_back must be ≥ 1".into());
        }
        Ok(())
    }

    /// Fields that fall outside the reference tuning ranges. Empty when the
    /// config could have come out of [`super::SearchSpace::reference`].
    pub fn reference_range_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let on_grid = |x: f64, lo: f64, hi: f64, step: f64| {
            let k = ((x - lo) / step).round();
            x >= lo - 1e-12 && x <= hi + 1e-12 && (lo + k * step - x).abs() < 1e-9
        };
        if !(1e-4..=1e-2).contains(&self.learning_rate) {
            v.push(format!("learning_rate {} outside [0.0001, 0.01]", self.learning_rate));
        }
        if ![32, 64].contains(&self.batch_size) {
            v.push(format!("batch_size {} not in {{32, 64}}", self.batch_size));
        }
        if !on_grid(self.epochs as f64, 10.0, 50.0, 10.0) {
            v.push(format!("epochs {} not in 10..=50 step 10", self.epochs));
        }
        if !on_grid(self.dropout, 0.1, 0.5, 0.1) {
            v.push(format!("dropout {} not in 0.1..=0.5 step 0.1", self.dropout));
        }
        if !on_grid(self.hidden_units as f64, 64.0, 256.0, 32.0) {
            v.push(format!("hidden_units {} not in 64..=256 step 32", self.hidden_units));
        }
        if !(1..=3).contains(&self.lstm_layers) {
            v.push(format!("lstm_layers {} not in 1..=3", self.lstm_layers));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean squared error over the epoch's mini-batches, scaled units.
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

/// Patience rule: stop once `patience` + 1 consecutive epochs fail to
/// improve on the best validation loss.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping { patience, best: f64::INFINITY, best_epoch: 0, since_best: 0 }
    }

    /// Records an epoch; returns `true` when it is a new best.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.since_best = 0;
            true
        } else {
            self.since_best += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since_best > self.patience
    }

    pub fn best(&self) -> (usize, f64) {
        (self.best_epoch, self.best)
    }
}

/// Mean squared error in scaled target units, inference mode.
pub fn scaled_mse(model: &LstmModel, samples: &[SequenceSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Input("no samples to score".into()));
    }
    let mut sum = 0.0;
    for s in samples {
        let y = model.forward(s, None)?;
        let e = y - model.scaler.scale_target(s.target);
        sum += e * e;
    }
    Ok(sum / samples.len() as f64)
}

fn check_samples(samples: &[SequenceSample], n_features: usize, look_back: usize, what: &str) -> Result<()> {
    for s in samples {
        if s.window.len() != look_back || s.window.iter().any(|v| v.len() != n_features) {
            return Err(Error::Input(format!(
                "{what} sample from {} does not match look_back {look_back} × {n_features} features",
                s.curve_id
            )));
        }
    }
    Ok(())
}

/// Trains a fresh model. The scaler is fit on `train` only; the returned
/// weights are those of the epoch with the lowest validation loss.
pub fn train(train: &[SequenceSample], val: &[SequenceSample], config: &TrainConfig) -> Result<(LstmModel, TrainHistory)> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Input("training and validation sets must be non-empty".into()));
    }
    let n_features = train[0].window.first().map(Vec::len).unwrap_or(0);
    check_samples(train, n_features, config.look_back, "train")?;
    check_samples(val, n_features, config.look_back, "validation")?;

    let mut model = LstmModel::new(config, n_features)?;
    model.scaler = Scaler::fit(train)?;
    let xs: Vec<Vec<f64>> = train.iter().map(|s| model.scaler.scale_window(&s.window)).collect();
    let ys: Vec<f64> = train.iter().map(|s| model.scaler.scale_target(s.target)).collect();

    let mut opt = Optimizer::new(config.optimizer, config.learning_rate, model.param_count());
    // separate streams so that dropout draws do not perturb the shuffle
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0001);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0002);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grad = vec![0.0; model.param_count()];

    let mut history = TrainHistory::default();
    let mut best_params = model.params().to_vec();
    let mut stopper = EarlyStopping::new(config.early_stop_patience);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &k in batch {
                loss_sum += model.accumulate_gradient(&xs[k], ys[k], scale, Some(&mut dropout_rng), &mut grad);
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training { epoch, message: "non-finite gradient".into() });
            }
            opt.step(model.params_mut(), &grad);
        }
        let train_loss = loss_sum / train.len() as f64;
        let val_loss = scaled_mse(&model, val)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Training { epoch, message: format!("loss diverged (train {train_loss}, val {val_loss})") });
        }
        history.epochs.push(EpochRecord { epoch, train_loss, val_loss });
        if stopper.observe(epoch, val_loss) {
            best_params.copy_from_slice(model.params());
        } else if stopper.should_stop() {
            history.stopped_early = epoch < config.epochs;
            break;
        }
    }
    (history.best_epoch, history.best_val_loss) = stopper.best();
    model.params_mut().copy_from_slice(&best_params);
    Ok((model, history))
}

pub fn history_to_csv(history: &TrainHistory) -> String {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for r in &history.epochs {
        let _ = writeln!(out, "{},{:e},{:e}", r.epoch, r.train_loss, r.val_loss);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_samples(n: usize, look_back: usize, offset: f64) -> Vec<SequenceSample> {
        (0..n)
            .map(|k| {
                let t0 = offset + k as f64;
                SequenceSample {
                    curve_id: "lin".into(),
                    window: (0..look_back).map(|j| vec![t0 + j as f64, 100.0 - 0.1 * (t0 + j as f64)]).collect(),
                    target: 100.0 - 0.1 * (t0 + look_back as f64),
                    temperature_c: t0 + look_back as f64,
                }
            })
            .collect()
    }

    fn small(epochs: usize) -> TrainConfig {
        TrainConfig {
            hidden_units: 6,
            lstm_layers: 1,
            look_back: 5,
            epochs,
            dropout: 0.0,
            learning_rate: 0.01,
            batch_size: 16,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn defaults_sit_inside_reference_ranges() {
        assert!(TrainConfig::default().reference_range_violations().is_empty());
        let c = TrainConfig { hidden_units: 32, dropout: 0.0, ..TrainConfig::default() };
        assert_eq!(c.reference_range_violations().len(), 2);
        assert!(c.validate().is_ok());
        assert!(TrainConfig { dropout: 1.0, ..c }.validate().is_err());
    }

    #[test]
    fn patience_zero_stops_one_epoch_after_best() {
        let mut s = EarlyStopping::new(0);
        let mut seen = 0;
        for (epoch, loss) in [1.0, 2.0, 3.0, 4.0].into_iter().enumerate() {
            seen += 1;
            s.observe(epoch + 1, loss);
            if s.should_stop() {
                break;
            }
        }
        assert_eq!(seen, 2);
        assert_eq!(s.best(), (1, 1.0));

        let mut p2 = EarlyStopping::new(2);
        let losses = [5.0, 4.0, 4.5, 4.2, 3.9, 4.0, 4.1, 4.3, 1.0];
        let stop = losses.iter().enumerate().position(|(i, &l)| {
            p2.observe(i + 1, l);
            p2.should_stop()
        });
        assert_eq!(stop, Some(7));
        assert_eq!(p2.best(), (5, 3.9));
    }

    #[test]
    fn same_seed_same_history() {
        let tr = linear_samples(60, 5, 0.0);
        let va = linear_samples(10, 5, 0.5);
        let cfg = TrainConfig { dropout: 0.2, ..small(4) };
        let (m1, h1) = train(&tr, &va, &cfg).unwrap();
        let (m2, h2) = train(&tr, &va, &cfg).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn learns_a_linear_decline() {
        let tr = linear_samples(200, 5, 0.0);
        let va = linear_samples(40, 5, 0.25);
        let (m, h) = train(&tr, &va, &small(40)).unwrap();
        assert!(h.best_val_loss < 1e-3, "{h:?}");
        let p = m.predict(&va[7]).unwrap();
        assert!((p - va[7].target).abs() < 1.0);
    }

    #[test]
    fn divergence_reports_epoch() {
        let tr = linear_samples(50, 5, 0.0);
        let va = linear_samples(5, 5, 0.0);
        let cfg = TrainConfig { optimizer: OptimizerKind::Sgd, learning_rate: 1e200, activation: Activation::Relu, ..small(3) };
        match train(&tr, &va, &cfg) {
            Err(Error::Training { epoch, .. }) => assert_eq!(epoch, 1),
            other => panic!("expected training error, got {other:?}"),
        }
    }

    #[test]
    fn empty_sets_rejected() {
        assert!(matches!(train(&[], &linear_samples(3, 5, 0.0), &small(1)), Err(Error::Input(_))));
    }

    #[test]
    fn history_csv_header() {
        let h = TrainHistory {
            epochs: vec![EpochRecord { epoch: 1, train_loss: 0.5, val_loss: 0.25 }],
            ..Default::default()
        };
        assert_eq!(history_to_csv(&h), "epoch,train_loss,val_loss\n1,5e-1,2.5e-1\n");
    }
}
