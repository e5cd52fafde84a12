//! Sequence model for forecasting TGA mass loss.
//!
//! [`features`] turns curves into per-row inputs, [`dataset`] slides
//! look-back windows and scales them, [`lstm`] and [`train`] fit a stacked
//! LSTM, [`search`] tunes it and [`metrics`] scores it.

pub mod checkpoint;
pub mod dataset;
pub mod features;
pub mod gradcheck;
pub mod lstm;
pub mod metrics;
pub mod optim;
pub mod search;
pub mod train;

pub use checkpoint::Checkpoint;
pub use dataset::{split_dataset, window_sequences, DatasetSplit, Scaler, SequenceSample, SplitFractions};
pub use features::{build_features, features_to_csv, lignocellulosic_remaining, FeatureMode, FeatureRow};
pub use gradcheck::{gradient_check, GradientReport};
pub use lstm::{Activation, LstmModel};
pub use metrics::{evaluate, evaluate_by_curve, metrics, predict_all, EvalMetrics};
pub use optim::OptimizerKind;
pub use search::{leaderboard_to_csv, random_search, SearchOutcome, SearchSpace, TrialResult};
pub use train::{history_to_csv, train, EarlyStopping, TrainConfig, TrainHistory};
