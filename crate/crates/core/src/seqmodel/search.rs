//! Random hyperparameter search.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::SequenceSample;
use super::lstm::{Activation, LstmModel};
use super::optim::OptimizerKind;
use super::train::{train, TrainConfig, DEFAULT_LOOK_BACK, DEFAULT_PATIENCE};
use crate::error::{Error, Result};

/// Candidate values per hyperparameter. The learning rate is drawn
/// log-uniformly from `[learning_rate.0, learning_rate.1]`; every other field
/// is a uniform pick from its list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub learning_rate: (f64, f64),
    pub batch_size: Vec<usize>,
    pub epochs: Vec<usize>,
    pub dropout: Vec<f64>,
    pub hidden_units: Vec<usize>,
    pub lstm_layers: Vec<usize>,
    pub activation: Vec<Activation>,
    pub optimizer: Vec<OptimizerKind>,
    pub look_back: usize,
    pub early_stop_patience: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self::reference()
    }
}

impl SearchSpace {
    /// The reference tuning grid.
    pub fn reference() -> Self {
        SearchSpace {
            learning_rate: (1e-4, 1e-2),
            batch_size: vec![32, 64],
            epochs: vec![10, 20, 30, 40, 50],
            dropout: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            hidden_units: (64..=256).step_by(32).collect(),
            lstm_layers: vec![1, 2, 3],
            activation: Activation::ALL.to_vec(),
            optimizer: OptimizerKind::ALL.to_vec(),
            look_back: DEFAULT_LOOK_BACK,
            early_stop_patience: DEFAULT_PATIENCE,
        }
    }

    /// Degenerate space holding exactly `c` (seed aside).
    pub fn single(c: &TrainConfig) -> Self {
        SearchSpace {
            learning_rate: (c.learning_rate, c.learning_rate),
            batch_size: vec![c.batch_size],
            epochs: vec![c.epochs],
            dropout: vec![c.dropout],
            hidden_units: vec![c.hidden_units],
            lstm_layers: vec![c.lstm_layers],
            activation: vec![c.activation],
            optimizer: vec![c.optimizer],
            look_back: c.look_back,
            early_stop_patience: c.early_stop_patience,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.learning_rate;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!("learning-rate range ({lo}, {hi}) is invalid")));
        }
        let empty = [
            ("batch_size", self.batch_size.is_empty()),
            ("epochs", self.epochs.is_empty()),
            ("dropout", self.dropout.is_empty()),
            ("hidden_units", self.hidden_units.is_empty()),
            ("lstm_layers", self.lstm_layers.is_empty()),
            ("activation", self.activation.is_empty()),
            ("optimizer", self.optimizer.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("search space has no {name} candidates")));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng, seed: u64) -> TrainConfig {
        let (lo, hi) = self.learning_rate;
        let learning_rate = if lo == hi { lo } else { (rng.gen_range(lo.ln()..hi.ln())).exp() };
        TrainConfig {
            learning_rate,
            batch_size: *self.batch_size.choose(rng).unwrap(),
            epochs: *self.epochs.choose(rng).unwrap(),
            dropout: *self.dropout.choose(rng).unwrap(),
            hidden_units: *self.hidden_units.choose(rng).unwrap(),
            lstm_layers: *self.lstm_layers.choose(rng).unwrap(),
            activation: *self.activation.choose(rng).unwrap(),
            optimizer: *self.optimizer.choose(rng).unwrap(),
            look_back: self.look_back,
            early_stop_patience: self.early_stop_patience,
            seed,
        }
    }
}

/// Seed of trial `i`, a SplitMix64 step over the pair.
pub fn trial_seed(master_seed: u64, index: usize) -> u64 {
    let mut z = master_seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: usize,
    pub config: TrainConfig,
    /// Best validation loss, scaled units; infinite for failed trials.
    pub val_loss: f64,
    pub epochs_run: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best_config: TrainConfig,
    pub best_model: LstmModel,
    /// Ascending by `(val_loss, index)`.
    pub leaderboard: Vec<TrialResult>,
}

/// Runs `trials` independent trainings in parallel and keeps the best.
pub fn random_search(
    space: &SearchSpace,
    trials: usize,
    master_seed: u64,
    train_set: &[SequenceSample],
    val_set: &[SequenceSample],
) -> Result<SearchOutcome> {
    if trials == 0 {
        return Err(Error::Config("random search needs at least one trial".into()));
    }
    space.validate()?;
    let configs: Vec<TrainConfig> = (0..trials)
        .map(|i| {
            let seed = trial_seed(master_seed, i);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            space.sample(&mut rng, seed)
        })
        .collect();

    let mut runs: Vec<(TrialResult, Option<LstmModel>)> = configs
        .into_par_iter()
        .enumerate()
        .map(|(index, config)| match train(train_set, val_set, &config) {
            Ok((model, hist)) => (
                TrialResult { index, config, val_loss: hist.best_val_loss, epochs_run: hist.epochs.len(), error: None },
                Some(model),
            ),
            Err(e) => {
                (TrialResult { index, config, val_loss: f64::INFINITY, epochs_run: 0, error: Some(e.to_string()) }, None)
            }
        })
        .collect();
    runs.sort_by(|a, b| a.0.val_loss.total_cmp(&b.0.val_loss).then(a.0.index.cmp(&b.0.index)));

    let (best, best_model) = match runs.first() {
        Some((r, Some(m))) => (r.config.clone(), m.clone()),
        _ => {
            let why = runs.first().and_then(|r| r.0.error.clone()).unwrap_or_default();
            return Err(Error::Training { epoch: 0, message: format!("every trial failed; first error: {why}") });
        }
    };
    Ok(SearchOutcome { best_config: best, best_model, leaderboard: runs.into_iter().map(|r| r.0).collect() })
}

pub fn leaderboard_to_csv(board: &[TrialResult]) -> String {
    let mut out = String::from(
        "rank,trial,val_loss,epochs_run,learning_rate,batch_size,epochs,dropout,hidden_units,lstm_layers,activation,optimizer,seed\n",
    );
    for (rank, r) in board.iter().enumerate() {
        let c = &r.config;
        let _ = writeln!(
            out,
            "{},{},{:e},{},{:e},{},{},{},{},{},{},{},{}",
            rank + 1,
            r.index,
            r.val_loss,
            r.epochs_run,
            c.learning_rate,
            c.batch_size,
            c.epochs,
            c.dropout,
            c.hidden_units,
            c.lstm_layers,
            c.activation.label(),
            c.optimizer.label(),
            c.seed
        );
    }
    out
}
