use pyrokin::constants::celsius_to_kelvin;
use pyrokin::seqmodel::{
    build_features, evaluate, random_search, split_dataset, train, window_sequences, Activation, FeatureMode,
    OptimizerKind, SearchSpace, SequenceSample, SplitFractions, TrainConfig,
};
use pyrokin::synthkin::make_fixture_suite;
use pyrokin::tga::{resample_uniform, SampleSpec, TgaCurve, TgaPoint};

/// Mass falling linearly from 100 % to 40 % between 30 and 900 °C.
fn linear_curve(beta: f64) -> TgaCurve {
    let n = 175;
    let points = (0..n)
        .map(|k| {
            let f = k as f64 / (n - 1) as f64;
            let t = celsius_to_kelvin(30.0 + 870.0 * f);
            TgaPoint { time_s: 870.0 * f * 60.0 / beta, temperature_k: t, mass_fraction: 1.0 - 0.6 * f }
        })
        .collect();
    TgaCurve::new(SampleSpec::date_seeds(), beta, points).unwrap()
}

fn samples_of(curves: &[TgaCurve], mode: FeatureMode, step: f64, look_back: usize) -> Vec<SequenceSample> {
    let mut rows = Vec::new();
    for c in curves {
        rows.extend(build_features(&resample_uniform(c, step).unwrap(), mode).unwrap());
    }
    window_sequences(&rows, look_back).unwrap()
}

#[test]
fn linear_decline_is_learned() {
    let curves: Vec<TgaCurve> = [5.0, 10.0, 15.0, 20.0].into_iter().map(linear_curve).collect();
    let samples = samples_of(&curves, FeatureMode::Model1, 5.0, 20);
    let split = split_dataset(samples, SplitFractions::default(), &[], 1).unwrap();
    let cfg = TrainConfig {
        hidden_units: 32,
        lstm_layers: 1,
        learning_rate: 0.005,
        epochs: 30,
        dropout: 0.0,
        optimizer: OptimizerKind::Adam,
        seed: 4,
        ..TrainConfig::default()
    };
    let (model, _) = train(&split.train, &split.val, &cfg).unwrap();
    let m = evaluate(&model, &split.val).unwrap();
    assert!(m.r_squared >= 0.99, "{m:?}");
    assert!((m.rmse * m.rmse - m.mse).abs() < 1e-12);
}

fn blend_split() -> pyrokin::seqmodel::DatasetSplit {
    let suite = make_fixture_suite(11).unwrap();
    let blend = suite.iter().find(|f| f.name == "Blend2").unwrap();
    let samples = samples_of(&blend.curves, FeatureMode::Model2, 10.0, 20);
    split_dataset(samples, SplitFractions::default(), &["Blend2@15".to_string()], 2).unwrap()
}

fn small_space() -> SearchSpace {
    SearchSpace {
        learning_rate: (1e-3, 2e-2),
        batch_size: vec![16, 32],
        epochs: vec![2, 4],
        dropout: vec![0.0, 0.1],
        hidden_units: vec![4, 8],
        lstm_layers: vec![1],
        activation: Activation::ALL.to_vec(),
        optimizer: OptimizerKind::ALL.to_vec(),
        look_back: 20,
        early_stop_patience: 5,
    }
}

#[test]
fn one_point_space_returns_its_config() {
    let split = blend_split();
    let cfg = TrainConfig { hidden_units: 5, lstm_layers: 1, epochs: 2, dropout: 0.0, ..TrainConfig::default() };
    let out = random_search(&SearchSpace::single(&cfg), 3, 9, &split.train, &split.val).unwrap();
    for r in &out.leaderboard {
        assert_eq!(TrainConfig { seed: cfg.seed, ..r.config.clone() }, cfg);
    }
    assert_eq!(TrainConfig { seed: cfg.seed, ..out.best_config }, cfg);
}

#[test]
fn search_is_deterministic_and_best_beats_median() {
    let split = blend_split();
    let a = random_search(&small_space(), 10, 21, &split.train, &split.val).unwrap();
    let b = random_search(&small_space(), 10, 21, &split.train, &split.val).unwrap();
    assert_eq!(a.leaderboard, b.leaderboard);
    assert_eq!(a.best_model, b.best_model);

    let mut losses: Vec<f64> = a.leaderboard.iter().map(|r| r.val_loss).collect();
    assert!(losses.windows(2).all(|w| w[0] <= w[1]));
    losses.sort_by(f64::total_cmp);
    let median = 0.5 * (losses[4] + losses[5]);
    assert!(a.leaderboard[0].val_loss <= median);
    assert_eq!(a.best_config, a.leaderboard[0].config);
}

#[test]
fn holdout_never_leaks_into_training() {
    let split = blend_split();
    assert!(!split.holdout.is_empty());
    assert!(split.holdout.iter().all(|s| s.curve_id == "Blend2@15"));
    for s in split.train.iter().chain(&split.val).chain(&split.test) {
        assert_ne!(s.curve_id, "Blend2@15");
    }
}

#[test]
fn model2_fibre_features_fall_monotonically() {
    let suite = make_fixture_suite(5).unwrap();
    let curve = &suite.iter().find(|f| f.name == "Blend1").unwrap().curves[1];
    let rows = build_features(&resample_uniform(curve, 5.0).unwrap(), FeatureMode::Model2).unwrap();
    for w in rows.windows(2) {
        for (a, b) in [
            (w[0].cellulose_t, w[1].cellulose_t),
            (w[0].hemicellulose_t, w[1].hemicellulose_t),
            (w[0].lignin_t, w[1].lignin_t),
        ] {
            assert!(b.unwrap() <= a.unwrap() + 1e-12);
        }
        // remaining fibre varies by at most its whole share per 5 K step
        assert!((w[0].lignin_t.unwrap() - w[1].lignin_t.unwrap()).abs() < 1.0);
    }
    assert_eq!(rows.last().unwrap().cellulose_t, Some(0.0));
}
