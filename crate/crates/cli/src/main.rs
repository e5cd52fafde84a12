//! `pyrokin`: kinetic, thermodynamic and sequence-model analysis of TGA runs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod analysis;
mod bundle;
mod config;
mod failure;
mod inputs;
mod sequence;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use crate::bundle::Rendered;
use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Text,
    Svg,
}

#[derive(Parser, Debug)]
#[command(name = "pyrokin", version, about = "Kinetic and thermodynamic analysis of thermogravimetric runs")]
struct Cli {
    /// Seed for every random choice (splits, initialisation, search).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory that receives the output bundle.
    #[arg(long, global = true, env = "PYROKIN_OUT", default_value = "pyrokin-out")]
    out_dir: PathBuf,
    /// What to print on stdout; files are always written.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Friedman, KAS and FWO activation energies over a conversion grid.
    Analyze(analysis::AnalyzeArgs),
    /// Activation enthalpy, Gibbs energy and entropy per conversion.
    Thermo(analysis::ThermoArgs),
    /// Simulated TGA curves from pseudo-component models.
    Synth(analysis::SynthArgs),
    /// Model input rows for the sequence model.
    Features(sequence::SeqArgs),
    /// Train one LSTM mass predictor.
    Train(sequence::TrainArgs),
    /// Random hyperparameter search.
    Tune(sequence::TuneArgs),
    /// Predicted vs actual mass curves from a saved model.
    Predict(sequence::PredictArgs),
    /// Error metrics of predictions.
    Evaluate(sequence::EvaluateArgs),
    /// Volatile matter from char yield and the VM + char = 100 check.
    Massbalance(analysis::MassBalanceArgs),
}

pub(crate) struct Ctx {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub config: RunConfig,
}

fn run(cli: Cli) -> Result<Rendered> {
    let ctx = Ctx { seed: cli.seed, out_dir: cli.out_dir, config: RunConfig::load(cli.config.as_deref())? };
    match &cli.command {
        Command::Analyze(a) => analysis::analyze(&ctx, a),
        Command::Thermo(a) => analysis::thermo(&ctx, a),
        Command::Synth(a) => analysis::synth(&ctx, a),
        Command::Features(a) => sequence::features(&ctx, a),
        Command::Train(a) => sequence::train_cmd(&ctx, a),
        Command::Tune(a) => sequence::tune(&ctx, a),
        Command::Predict(a) => sequence::predict(&ctx, a),
        Command::Evaluate(a) => sequence::evaluate_cmd(&ctx, a),
        Command::Massbalance(a) => analysis::massbalance(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(failure::EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let format = cli.format;
    match run(cli) {
        Ok(r) => {
            let out = match format {
                Format::Text => r.text,
                Format::Csv => r.csv.unwrap_or(r.text),
                Format::Svg => r.svg.unwrap_or(r.text),
            };
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(failure::exit_code(&e))
        }
    }
}
