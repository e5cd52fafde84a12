//! `features`, `train`, `tune`, `predict` and `evaluate`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;

use pyrokin::plot::{emit_svg, Mark, PlotStyle, Series};
use pyrokin::seqmodel::{
    build_features, evaluate, evaluate_by_curve, features_to_csv, history_to_csv, leaderboard_to_csv, metrics,
    predict_all, random_search, split_dataset, train, window_sequences, Activation, Checkpoint, DatasetSplit,
    EvalMetrics, FeatureMode, FeatureRow, LstmModel, OptimizerKind, SequenceSample,
};
use pyrokin::tga::{resample_uniform, TgaCurve};

use crate::bundle::{Bundle, Rendered};
use crate::config::{RunConfig, SequenceConfig};
use crate::failure::{config_err, input_err};
use crate::inputs::{expand_paths, file_stem, load_curves};
use crate::Ctx;

#[derive(Args, Debug, Clone)]
pub struct SeqArgs {
    /// Curve CSV files, each with a JSON sidecar, or directories holding them.
    #[arg(required = true)]
    pub curves: Vec<PathBuf>,
    /// Feature set: model1 (blend, rate, temperature) or model2 (adds fibre terms).
    #[arg(long)]
    pub mode: Option<String>,
    /// Curve ids withheld from training, comma separated, e.g. Blend2@15.
    #[arg(long)]
    pub holdout: Option<String>,
    /// Temperature step (K) the curves are resampled to before windowing.
    #[arg(long)]
    pub resample_step: Option<f64>,
}

impl SeqArgs {
    fn apply(&self, seq: &mut SequenceConfig) -> Result<()> {
        if let Some(m) = &self.mode {
            seq.mode = FeatureMode::parse(m)?;
        }
        if let Some(h) = &self.holdout {
            seq.holdout = h.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        if let Some(s) = self.resample_step {
            seq.resample_step = s;
        }
        if !(seq.resample_step > 0.0 && seq.resample_step.is_finite()) {
            return Err(config_err(format!("resample step {} must be > 0", seq.resample_step)));
        }
        Ok(())
    }
}

fn feature_rows(curves: &[TgaCurve], mode: FeatureMode, step: f64) -> Result<Vec<FeatureRow>> {
    let mut rows = Vec::new();
    for c in curves {
        let uniform = resample_uniform(c, step)?;
        rows.extend(build_features(&uniform, mode).with_context(|| format!("features of {}", c.curve_id()))?);
    }
    Ok(rows)
}

fn dataset(curves: &[TgaCurve], seq: &SequenceConfig, look_back: usize, seed: u64) -> Result<DatasetSplit> {
    for h in &seq.holdout {
        if !curves.iter().any(|c| c.curve_id() == *h) {
            return Err(config_err(format!("holdout curve {h:?} is not among the inputs")));
        }
    }
    let rows = feature_rows(curves, seq.mode, seq.resample_step)?;
    let samples = window_sequences(&rows, look_back)?;
    if samples.is_empty() {
        return Err(input_err(format!("curves are too short for a look-back of {look_back}")));
    }
    Ok(split_dataset(samples, seq.split, &seq.holdout, seed)?)
}

pub fn features(ctx: &Ctx, args: &SeqArgs) -> Result<Rendered> {
    let mut config = ctx.config.clone();
    args.apply(&mut config.sequence)?;
    let curves = load_curves(&args.curves)?;
    let rows = feature_rows(&curves, config.sequence.mode, config.sequence.resample_step)?;
    let csv = features_to_csv(&rows);
    let mut bundle = Bundle::create(&ctx.out_dir)?;
    bundle.write("features.csv", &csv)?;
    bundle.finish("features", &expand_paths(&args.curves)?, config.digest(), ctx.seed)?;
    let text = format!(
        "{} rows, {} features ({}) from {} curves\n",
        rows.len(),
        config.sequence.mode.feature_count(),
        config.sequence.mode.label(),
        curves.len()
    );
    Ok(Rendered { text, csv: Some(csv), svg: None })
}

fn metrics_csv(rows: &[(String, EvalMetrics)]) -> String {
    let mut out = String::from("split,n,mae,mse,rmse,r_squared\n");
    for (name, m) in rows {
        let _ = writeln!(out, "{name},{},{:.6},{:.6},{:.6},{:.6}", m.n, m.mae, m.mse, m.rmse, m.r_squared);
    }
    out
}

fn metrics_text(rows: &[(String, EvalMetrics)]) -> String {
    let w = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<w$}  {:>6}  {:>9}  {:>9}  {:>9}  {:>8}\n", "split", "n", "MAE", "MSE", "RMSE", "R²");
    for (name, m) in rows {
        let _ = writeln!(
            out,
            "{name:<w$}  {:>6}  {:>9.4}  {:>9.4}  {:>9.4}  {:>8.4}",
            m.n, m.mae, m.mse, m.rmse, m.r_squared
        );
    }
    out
}

/// Metrics of every non-empty split, plus each held-out curve on its own.
fn split_metrics(model: &LstmModel, split: &DatasetSplit) -> Result<Vec<(String, EvalMetrics)>> {
    let mut rows = Vec::new();
    for (name, set) in [("train", &split.train), ("val", &split.val), ("test", &split.test), ("holdout", &split.holdout)] {
        if !set.is_empty() {
            rows.push((name.to_string(), evaluate(model, set)?));
        }
    }
    if !split.holdout.is_empty() {
        for (id, m) in evaluate_by_curve(model, &split.holdout)? {
            rows.push((format!("holdout:{id}"), m));
        }
    }
    Ok(rows)
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[command(flatten)]
    pub seq: SeqArgs,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub hidden_units: Option<usize>,
    #[arg(long)]
    pub lstm_layers: Option<usize>,
    /// relu, sigmoid or tanh.
    #[arg(long)]
    pub activation: Option<String>,
    /// adam, sgd or rmsprop.
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub look_back: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
}

impl TrainArgs {
    fn apply(&self, cfg: &mut RunConfig, seed: u64) -> Result<()> {
        self.seq.apply(&mut cfg.sequence)?;
        let t = &mut cfg.train;
        macro_rules! set {
            ($field:ident, $value:expr) => {
                if let Some(v) = $value {
                    t.$field = v;
                }
            };
        }
        set!(learning_rate, self.learning_rate);
        set!(batch_size, self.batch_size);
        set!(epochs, self.epochs);
        set!(dropout, self.dropout);
        set!(hidden_units, self.hidden_units);
        set!(lstm_layers, self.lstm_layers);
        set!(look_back, self.look_back);
        set!(early_stop_patience, self.patience);
        if let Some(a) = &self.activation {
            t.activation = Activation::parse(a)?;
        }
        if let Some(o) = &self.optimizer {
            t.optimizer = OptimizerKind::parse(o)?;
        }
        t.seed = seed;
        t.validate()?;
        Ok(())
    }
}

pub fn train_cmd(ctx: &Ctx, args: &TrainArgs) -> Result<Rendered> {
    let mut config = ctx.config.clone();
    args.apply(&mut config, ctx.seed)?;
    for note in config.train.reference_range_violations() {
        eprintln!("note: {note}");
    }
    let curves = load_curves(&args.seq.curves)?;
    let split = dataset(&curves, &config.sequence, config.train.look_back, ctx.seed)?;
    let (model, history) = train(&split.train, &split.val, &config.train)?;
    let rows = split_metrics(&model, &split)?;

    let mut bundle = Bundle::create(&ctx.out_dir)?;
    let checkpoint = Checkpoint::from_model(&model, config.sequence.mode, config.sequence.resample_step);
    bundle.write("model.json", checkpoint.to_json()? + "\n")?;
    bundle.write("history.csv", history_to_csv(&history))?;
    let csv = metrics_csv(&rows);
    bundle.write("metrics.csv", &csv)?;
    bundle.finish("train", &expand_paths(&args.seq.curves)?, config.digest(), ctx.seed)?;

    let mut text = format!(
        "trained {} epochs{}; best epoch {} (val loss {:.3e})\n",
        history.epochs.len(),
        if history.stopped_early { " (early stop)" } else { "" },
        history.best_epoch,
        history.best_val_loss
    );
    text.push_str(&metrics_text(&rows));
    Ok(Rendered { text, csv: Some(csv), svg: None })
}

#[derive(Args, Debug, Clone)]
pub struct TuneArgs {
    #[command(flatten)]
    pub seq: SeqArgs,
    /// Number of random configurations to train.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
}

pub fn tune(ctx: &Ctx, args: &TuneArgs) -> Result<Rendered> {
    let mut config = ctx.config.clone();
    args.seq.apply(&mut config.sequence)?;
    config.search.validate()?;
    let curves = load_curves(&args.seq.curves)?;
    let split = dataset(&curves, &config.sequence, config.search.look_back, ctx.seed)?;
    let outcome = random_search(&config.search, args.trials, ctx.seed, &split.train, &split.val)?;
    let rows = split_metrics(&outcome.best_model, &split)?;

    let mut bundle = Bundle::create(&ctx.out_dir)?;
    let board = leaderboard_to_csv(&outcome.leaderboard);
    bundle.write("leaderboard.csv", &board)?;
    let checkpoint = Checkpoint::from_model(&outcome.best_model, config.sequence.mode, config.sequence.resample_step);
    bundle.write("best_model.json", checkpoint.to_json()? + "\n")?;
    bundle.write("metrics.csv", metrics_csv(&rows))?;
    bundle.finish("tune", &expand_paths(&args.seq.curves)?, config.digest(), ctx.seed)?;

    let failed = outcome.leaderboard.iter().filter(|r| r.error.is_some()).count();
    let best = &outcome.leaderboard[0];
    let c = &best.config;
    let mut text = format!(
        "{} trials ({failed} failed); best trial {} val loss {:.3e}\n  lr {:.2e} batch {} epochs {} dropout {} hidden {} layers {} {} {}\n",
        outcome.leaderboard.len(),
        best.index,
        best.val_loss,
        c.learning_rate,
        c.batch_size,
        c.epochs,
        c.dropout,
        c.hidden_units,
        c.lstm_layers,
        c.activation.label(),
        c.optimizer.label()
    );
    text.push_str(&metrics_text(&rows));
    Ok(Rendered { text, csv: Some(board), svg: None })
}

struct Prediction {
    curve_id: String,
    temperature_c: f64,
    actual: f64,
    predicted: f64,
}

fn load_model(path: &Path) -> Result<(Checkpoint, LstmModel)> {
    let ck = Checkpoint::load(path).with_context(|| format!("loading model {}", path.display()))?;
    let model = ck.to_model()?;
    Ok((ck, model))
}

fn predict_curves(path: &Path, curve_paths: &[PathBuf]) -> Result<Vec<Prediction>> {
    let (ck, model) = load_model(path)?;
    let curves = load_curves(curve_paths)?;
    let rows = feature_rows(&curves, ck.feature_mode, ck.resample_step)?;
    let samples: Vec<SequenceSample> = window_sequences(&rows, model.config.look_back)?;
    if samples.is_empty() {
        return Err(input_err(format!("curves are too short for a look-back of {}", model.config.look_back)));
    }
    let predicted = predict_all(&model, &samples)?;
    Ok(samples
        .into_iter()
        .zip(predicted)
        .map(|(s, p)| Prediction { curve_id: s.curve_id, temperature_c: s.temperature_c, actual: s.target, predicted: p })
        .collect())
}

fn predictions_csv(preds: &[Prediction]) -> String {
    let mut out = String::from("curve_id,temperature_c,actual_mass_pct,predicted_mass_pct\n");
    for p in preds {
        let _ = writeln!(out, "{},{:.4},{:.6},{:.6}", p.curve_id, p.temperature_c, p.actual, p.predicted);
    }
    out
}

fn grouped(preds: &[Prediction]) -> Vec<(&str, Vec<&Prediction>)> {
    let mut groups: Vec<(&str, Vec<&Prediction>)> = Vec::new();
    for p in preds {
        match groups.iter_mut().find(|(id, _)| *id == p.curve_id) {
            Some((_, g)) => g.push(p),
            None => groups.push((&p.curve_id, vec![p])),
        }
    }
    groups
}

fn overlay_svg(curve_id: &str, preds: &[&Prediction]) -> Result<String> {
    let series = vec![
        Series::new("actual", preds.iter().map(|p| (p.temperature_c, p.actual)).collect()),
        Series::new("predicted", preds.iter().map(|p| (p.temperature_c, p.predicted)).collect()),
    ];
    let style = PlotStyle {
        title: format!("Predicted vs actual: {curve_id}"),
        x_label: "temperature (°C)".into(),
        y_label: "mass (%)".into(),
        mark: Mark::Line,
        ..PlotStyle::default()
    };
    Ok(emit_svg(&series, &style)?)
}

fn per_curve_metrics(preds: &[Prediction]) -> Result<Vec<(String, EvalMetrics)>> {
    let all_a: Vec<f64> = preds.iter().map(|p| p.actual).collect();
    let all_p: Vec<f64> = preds.iter().map(|p| p.predicted).collect();
    let mut rows = vec![("all".to_string(), metrics(&all_a, &all_p)?)];
    for (id, g) in grouped(preds) {
        let a: Vec<f64> = g.iter().map(|p| p.actual).collect();
        let p: Vec<f64> = g.iter().map(|p| p.predicted).collect();
        rows.push((id.to_string(), metrics(&a, &p)?));
    }
    Ok(rows)
}

#[derive(Args, Debug, Clone)]
pub struct PredictArgs {
    /// Model checkpoint written by train or tune.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(required = true)]
    pub curves: Vec<PathBuf>,
}

pub fn predict(ctx: &Ctx, args: &PredictArgs) -> Result<Rendered> {
    let preds = predict_curves(&args.model, &args.curves)?;
    let csv = predictions_csv(&preds);
    let mut bundle = Bundle::create(&ctx.out_dir)?;
    bundle.write("predictions.csv", &csv)?;
    let mut first_svg = None;
    for (id, g) in grouped(&preds) {
        if g.len() < 2 {
            continue;
        }
        let svg = overlay_svg(id, &g)?;
        bundle.write(&format!("predicted_{}.svg", file_stem(id)), &svg)?;
        first_svg.get_or_insert(svg);
    }
    let mut inputs = vec![args.model.clone()];
    inputs.extend(expand_paths(&args.curves)?);
    bundle.finish("predict", &inputs, ctx.config.digest(), ctx.seed)?;
    let text = metrics_text(&per_curve_metrics(&preds)?);
    Ok(Rendered { text, csv: Some(csv), svg: first_svg })
}

#[derive(Args, Debug, Clone)]
pub struct EvaluateArgs {
    /// Predictions CSV with actual_mass_pct and predicted_mass_pct columns.
    #[arg(long, conflicts_with = "model")]
    pub predictions: Option<PathBuf>,
    /// Model checkpoint to run over the given curves instead.
    #[arg(long, requires = "curves")]
    pub model: Option<PathBuf>,
    pub curves: Vec<PathBuf>,
}

fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<BTreeMap<String, String>>().enumerate() {
        let rec = rec.map_err(|e| input_err(format!("{} row {}: {e}", path.display(), i + 1)))?;
        let num = |key: &str| -> Result<f64> {
            let v = rec.get(key).ok_or_else(|| input_err(format!("{}: missing column {key}", path.display())))?;
            v.parse().map_err(|_| input_err(format!("{} row {}: {key} {v:?} is not a number", path.display(), i + 1)))
        };
        out.push(Prediction {
            curve_id: rec.get("curve_id").cloned().unwrap_or_else(|| "all".into()),
            temperature_c: num("temperature_c").unwrap_or(f64::NAN),
            actual: num("actual_mass_pct")?,
            predicted: num("predicted_mass_pct")?,
        });
    }
    if out.is_empty() {
        return Err(input_err(format!("{} holds no predictions", path.display())));
    }
    Ok(out)
}

pub fn evaluate_cmd(ctx: &Ctx, args: &EvaluateArgs) -> Result<Rendered> {
    let (preds, inputs) = match (&args.predictions, &args.model) {
        (Some(p), None) => (read_predictions(p)?, vec![p.clone()]),
        (None, Some(m)) => {
            let mut inputs = vec![m.clone()];
            inputs.extend(expand_paths(&args.curves)?);
            (predict_curves(m, &args.curves)?, inputs)
        }
        _ => return Err(config_err("evaluate needs --predictions, or --model with curve files")),
    };
    let rows = per_curve_metrics(&preds)?;
    let csv = metrics_csv(&rows);
    let mut bundle = Bundle::create(&ctx.out_dir)?;
    bundle.write("evaluation.csv", &csv)?;
    bundle.finish("evaluate", &inputs, ctx.config.digest(), ctx.seed)?;
    let m = &rows[0].1;
    let mut text = format!("R²={:.4} RMSE={:.4} MSE={:.4} MAE={:.4} n={}\n", m.r_squared, m.rmse, m.mse, m.mae, m.n);
    if rows.len() > 2 {
        text.push_str(&metrics_text(&rows[1..]));
    }
    Ok(Rendered { text, csv: Some(csv), svg: None })
}
