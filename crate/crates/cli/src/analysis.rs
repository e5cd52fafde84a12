//! `analyze`, `thermo`, `synth` and `massbalance`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use pyrokin::constants::kelvin_to_celsius;
use pyrokin::kinetics::{run_analysis, AnalysisTable, Method, ReactionModel};
use pyrokin::plot::{emit_svg, Mark, PlotStyle, Series};
use pyrokin::preprocess::{compute_dtg, find_peaks, DtgPeak, Stage, StageWindow};
use pyrokin::report::{
    check_mass_balance, ea_plot_csv, kinetics_to_csv, kinetics_to_text, mass_balance_to_text, vm_from_char,
    MassBalanceCheck, YieldRow,
};
use pyrokin::synthkin::{
    make_fixture_suite, simulate_grid, single_step_model, three_component_model_ds, with_residue,
    PseudoComponentModel,
};
use pyrokin::thermo::{profile_to_csv, thermo_profile, ThermoEstimate};
use pyrokin::tga::{resample_uniform, write_curve_file, TgaCurve};

use crate::bundle::{Bundle, Rendered};
use crate::config::{apply_stage_windows, parse_alpha_grid, parse_list, RunConfig};
use crate::failure::{config_err, input_err, numeric_err};
use crate::inputs::{expand_paths, file_stem, load_curves};
use crate::Ctx;

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    /// Curve CSV files, each with a JSON sidecar, or directories holding them.
    #[arg(required = true)]
    pub curves: Vec<PathBuf>,
    /// Conversion grid as lo:hi:step.
    #[arg(long)]
    pub alpha_grid: Option<String>,
    /// Odd moving-average width applied before differentiating.
    #[arg(long)]
    pub smooth_window: Option<usize>,
    /// Temperature (°C) at which the initial mass is read.
    #[arg(long)]
    pub m0_at: Option<f64>,
    /// Stage windows in °C, e.g. hemicellulose=225:325,cellulose=315:405.
    #[arg(long)]
    pub stage_windows: Option<String>,
    /// Uniform temperature step (K) the curves are resampled to.
    #[arg(long)]
    pub resample_dt: Option<f64>,
    /// Reaction-order model used for the pre-exponential factor, e.g. F1.
    #[arg(long)]
    pub model: Option<String>,
}

impl AnalyzeArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        let a = &mut cfg.analysis;
        if let Some(g) = &self.alpha_grid {
            a.alpha_grid = parse_alpha_grid(g)?;
        }
        if let Some(w) = self.smooth_window {
            a.smooth_window = w;
        }
        if let Some(m) = self.m0_at {
            a.m0_at_c = m;
        }
        if let Some(dt) = self.resample_dt {
            a.resample_step = dt;
        }
        if let Some(m) = &self.model {
            a.model = ReactionModel::parse(m)?;
        }
        if let Some(s) = &self.stage_windows {
            apply_stage_windows(&mut cfg.stage_windows, s)?;
        }
        if a.smooth_window == 0 || a.smooth_window.is_multiple_of(2) {
            return Err(config_err(format!("smooth window {} must be odd", a.smooth_window)));
        }
        if !(a.resample_step > 0.0 && a.resample_step.is_finite()) {
            return Err(config_err(format!("resample step {} must be > 0", a.resample_step)));
        }
        Ok(())
    }
}

fn dtg_peaks(curve: &TgaCurve, cfg: &RunConfig, windows: &[StageWindow]) -> Result<Vec<DtgPeak>> {
    let uniform = resample_uniform(curve, cfg.analysis.resample_step)?;
    let dtg = compute_dtg(&uniform, cfg.analysis.smooth_window)
        .with_context(|| format!("DTG of {}", curve.curve_id()))?;
    Ok(find_peaks(&dtg, windows))
}

fn peaks_csv(rows: &[(String, f64, DtgPeak)]) -> String {
    let mut out = String::from("curve_id,heating_rate,stage,t_peak_c,peak_rate_pct_per_c\n");
    for (id, beta, p) in rows {
        let _ = writeln!(
            out,
            "{id},{beta},{},{:.2},{:.6}",
            p.stage.label(),
            kelvin_to_celsius(p.t_peak_k),
            p.peak_rate * 100.0
        );
    }
    out
}

fn ea_svg(table: &AnalysisTable) -> Result<Option<String>> {
    let series: Vec<Series> = table
        .methods()
        .into_iter()
        .map(|m| Series::new(m.label(), table.column(m).iter().map(|e| (e.alpha, e.ea_kj_mol())).collect()))
        .filter(|s| s.points.len() >= 2)
        .collect();
    if series.is_empty() {
        return Ok(None);
    }
    let style = PlotStyle {
        title: format!("Activation energy vs conversion: {}", table.sample_id),
        x_label: "conversion α".into(),
        y_label: "Ea (kJ/mol)".into(),
        mark: Mark::Line,
        ..PlotStyle::default()
    };
    Ok(Some(emit_svg(&series, &style)?))
}

struct Analysis {
    config: RunConfig,
    curves: Vec<TgaCurve>,
    table: AnalysisTable,
}

fn analyze_curves(ctx: &Ctx, args: &AnalyzeArgs) -> Result<Analysis> {
    let mut config = ctx.config.clone();
    args.apply(&mut config)?;
    let curves = load_curves(&args.curves)?;
    let table = run_analysis(&curves, &config.analysis)?;
    Ok(Analysis { config, curves, table })
}

pub fn analyze(ctx: &Ctx, args: &AnalyzeArgs) -> Result<Rendered> {
    let Analysis { config, curves, table } = analyze_curves(ctx, args)?;
    let windows = config.windows();
    let mut peaks = Vec::new();
    for c in &curves {
        for p in dtg_peaks(c, &config, &windows)? {
            peaks.push((c.curve_id(), c.heating_rate, p));
        }
    }

    let mut bundle = Bundle::create(&ctx.out_dir)?;
    let csv = kinetics_to_csv(&table);
    let text = kinetics_to_text(&table);
    bundle.write("kinetics.csv", &csv)?;
    bundle.write("kinetics.txt", &text)?;
    bundle.write("ea_vs_alpha.csv", ea_plot_csv(&table))?;
    let svg = ea_svg(&table)?;
    if let Some(svg) = &svg {
        bundle.write("ea_vs_alpha.svg", svg)?;
    }
    bundle.write("dtg_peaks.csv", peaks_csv(&peaks))?;
    bundle.finish("analyze", &expand_paths(&args.curves)?, config.digest(), ctx.seed)?;
    Ok(Rendered { text, csv: Some(csv), svg })
}

#[derive(Args, Debug, Clone)]
pub struct ThermoArgs {
    #[command(flatten)]
    pub analysis: AnalyzeArgs,
    /// Reference peak temperature in °C; defaults to the hemicellulose DTG
    /// peak of the reference heating-rate curve.
    #[arg(long)]
    pub tm: Option<f64>,
    /// Heating rate (°C/min) whose DTG peak supplies the default Tm.
    #[arg(long, default_value_t = 10.0)]
    pub reference_beta: f64,
}

fn reference_tm(curves: &[TgaCurve], beta: f64, cfg: &RunConfig) -> Result<f64> {
    let curve = curves
        .iter()
        .find(|c| (c.heating_rate - beta).abs() < 1e-9)
        .ok_or_else(|| numeric_err(format!("no {beta} °C/min curve to take Tm from; pass --tm")))?;
    let peaks = dtg_peaks(curve, cfg, &cfg.windows())?;
    peaks
        .iter()
        .find(|p| p.stage == Stage::Hemicellulose)
        .map(|p| p.t_peak_k)
        .ok_or_else(|| numeric_err(format!("no hemicellulose DTG peak in {}; pass --tm", curve.curve_id())))
}

fn thermo_text(sample: &str, profile: &[ThermoEstimate]) -> String {
    let mut out = String::new();
    let tm = profile.first().map(|e| e.t_m).unwrap_or(f64::NAN);
    let _ = writeln!(out, "Thermodynamic parameters: {sample} (Tm = {:.2} °C)", kelvin_to_celsius(tm));
    let head = format!("{:<9} {:<7} {:>12} {:>12} {:>14}", "method", "alpha", "dH(kJ/mol)", "dG(kJ/mol)", "dS(J/mol/K)");
    let _ = writeln!(out, "{head}\n{}", "-".repeat(head.chars().count()));
    for e in profile {
        let _ = writeln!(
            out,
            "{:<9} {:<7.2} {:>12.2} {:>12.2} {:>14.2}",
            e.method.label(),
            e.alpha,
            e.delta_h / 1000.0,
            e.delta_g / 1000.0,
            e.delta_s
        );
    }
    out
}

fn thermo_svg(profile: &[ThermoEstimate], pick: fn(&ThermoEstimate) -> f64, y_label: &str) -> Result<Option<String>> {
    let series: Vec<Series> = Method::ALL
        .iter()
        .map(|&m| {
            let pts = profile.iter().filter(|e| e.method == m).map(|e| (e.alpha, pick(e))).collect();
            Series::new(m.label(), pts)
        })
        .filter(|s| s.points.len() >= 2)
        .collect();
    if series.is_empty() {
        return Ok(None);
    }
    let style = PlotStyle { x_label: "conversion α".into(), y_label: y_label.into(), ..PlotStyle::default() };
    Ok(Some(emit_svg(&series, &style)?))
}

pub fn thermo(ctx: &Ctx, args: &ThermoArgs) -> Result<Rendered> {
    let Analysis { config, curves, table } = analyze_curves(ctx, &args.analysis)?;
    let tm_k = match args.tm {
        Some(c) => pyrokin::constants::celsius_to_kelvin(c),
        None => reference_tm(&curves, args.reference_beta, &config)?,
    };
    let profile = thermo_profile(&table, tm_k)?;
    let csv = profile_to_csv(&profile);
    let text = thermo_text(&table.sample_id, &profile);

    let mut bundle = Bundle::create(&ctx.out_dir)?;
    bundle.write("thermo.csv", &csv)?;
    bundle.write("thermo.txt", &text)?;
    let mut first_svg = None;
    let plots: [(&str, fn(&ThermoEstimate) -> f64, &str); 3] = [
        ("thermo_dh.svg", |e| e.delta_h / 1000.0, "ΔH (kJ/mol)"),
        ("thermo_dg.svg", |e| e.delta_g / 1000.0, "ΔG (kJ/mol)"),
        ("thermo_ds.svg", |e| e.delta_s, "ΔS (J/(mol·K))"),
    ];
    for (name, pick, label) in plots {
        if let Some(svg) = thermo_svg(&profile, pick, label)? {
            bundle.write(name, &svg)?;
            first_svg.get_or_insert(svg);
        }
    }
    bundle.finish("thermo", &expand_paths(&args.analysis.curves)?, config.digest(), ctx.seed)?;
    Ok(Rendered { text, csv: Some(csv), svg: first_svg })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// One first-order reaction over a 25 % inert residue.
    SingleStep,
    /// Date-seed-like hemicellulose, cellulose and lignin components.
    ThreeComponent,
    /// Single step, two feedstocks and three blends; uses --seed.
    Suite,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    /// Heating rates, °C/min.
    #[arg(long, default_value = "5,10,15,20")]
    pub beta: String,
    /// Temperature step of the integration and output grid, K.
    #[arg(long, default_value_t = 0.5)]
    pub dt: f64,
}

pub fn synth(ctx: &Ctx, args: &SynthArgs) -> Result<Rendered> {
    let betas = parse_list(&args.beta, "--beta")?;
    if betas.iter().any(|b| !(*b > 0.0)) {
        return Err(config_err("heating rates must be > 0"));
    }
    if !(args.dt > 0.0) {
        return Err(config_err("--dt must be > 0"));
    }
    let models: Vec<(Option<String>, PseudoComponentModel)> = match args.preset {
        Preset::SingleStep => vec![(None, with_residue(single_step_model(), 0.25))],
        Preset::ThreeComponent => vec![(None, three_component_model_ds())],
        Preset::Suite => make_fixture_suite(ctx.seed)?.into_iter().map(|f| (Some(f.name), f.model)).collect(),
    };

    let mut bundle = Bundle::create(&ctx.out_dir)?;
    let mut listing = String::from("file,sample_id,heating_rate,points\n");
    for (subdir, model) in &models {
        for curve in simulate_grid(model, &betas, args.dt)? {
            let stem = file_stem(&curve.curve_id());
            let name = match subdir {
                Some(d) => format!("{d}/{stem}.csv"),
                None => format!("{stem}.csv"),
            };
            let path = bundle.path(&name);
            std::fs::create_dir_all(path.parent().expect("bundle paths have a parent"))?;
            write_curve_file(&curve, &path)?;
            bundle.adopt(&name)?;
            bundle.adopt(&name.replace(".csv", ".json"))?;
            let _ = writeln!(listing, "{name},{},{},{}", curve.spec.sample_id, curve.heating_rate, curve.points.len());
        }
    }
    let n = listing.lines().count() - 1;
    let text = format!("wrote {n} curves to {}\n", ctx.out_dir.display());
    bundle.finish("synth", &[], ctx.config.digest(), ctx.seed)?;
    Ok(Rendered { text, csv: Some(listing), svg: None })
}

#[derive(Args, Debug, Clone)]
pub struct MassBalanceArgs {
    /// CSV with columns sample,vm_pct,char_pct.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Char yields (%) to convert, comma separated.
    #[arg(long = "char")]
    pub char_pct: Option<String>,
}

fn read_yields(path: &Path) -> Result<Vec<YieldRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| input_err(format!("{} row {}: {e}", path.display(), i + 1))))
        .collect()
}

fn balance_csv(checks: &[MassBalanceCheck]) -> String {
    let mut out = String::from("sample,vm_pct,char_pct,expected_vm_pct,imbalance,status\n");
    for c in checks {
        let _ = writeln!(
            out,
            "{},{:.2},{:.2},{:.2},{:.2},{}",
            c.sample,
            c.reported_vm_pct,
            c.char_pct,
            c.expected_vm_pct,
            c.imbalance,
            if c.consistent { "ok" } else { "inconsistent" }
        );
    }
    out
}

pub fn massbalance(ctx: &Ctx, args: &MassBalanceArgs) -> Result<Rendered> {
    if args.input.is_none() && args.char_pct.is_none() {
        return Err(config_err("massbalance needs --input or --char"));
    }
    let mut bundle = Bundle::create(&ctx.out_dir)?;
    let mut text = String::new();
    let mut csv = String::new();
    if let Some(list) = &args.char_pct {
        let mut vm_csv = String::from("char_pct,vm_pct\n");
        for eta in parse_list(list, "--char")? {
            let vm = vm_from_char(eta)?;
            let _ = writeln!(text, "η={eta:.2} % -> VM={vm:.2} %");
            let _ = writeln!(vm_csv, "{eta:.2},{vm:.2}");
        }
        bundle.write("vm_from_char.csv", &vm_csv)?;
        csv.push_str(&vm_csv);
    }
    let mut inputs = Vec::new();
    if let Some(path) = &args.input {
        let checks = check_mass_balance(&read_yields(path)?)?;
        let table = mass_balance_to_text(&checks);
        let rows = balance_csv(&checks);
        bundle.write("mass_balance.csv", &rows)?;
        bundle.write("mass_balance.txt", &table)?;
        text.push_str(&table);
        csv.push_str(&rows);
        inputs.push(path.clone());
    }
    bundle.finish("massbalance", &inputs, ctx.config.digest(), ctx.seed)?;
    Ok(Rendered { text, csv: Some(csv), svg: None })
}
