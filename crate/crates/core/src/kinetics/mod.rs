//! Isoconversional (model-free) kinetics: Friedman, KAS and FWO.
//!
//! At a fixed conversion α every heating rate contributes one point
//! `(β, T_α, dα/dt)`. Each method regresses a different transform of those
//! points against `1/T_α`:
//!
//! ```text
//! Friedman  ln(dα/dt) = ln(A·f(α)) − Ea/(R·T)
//! KAS       ln(β/T²)  = ln(A·R/(Ea·g(α))) − Ea/(R·T)
//! FWO       ln(β)     = ln(A·Ea/(R·g(α))) − 5.331 − 1.052·Ea/(R·T)
//! ```
//!
//! Ea comes from the slope. A comes from the intercept and therefore needs a
//! reaction model (`f`, `g`); first order is the default. β is in K/s so that
//! A is in 1/s. A is carried as `ln A` because blend data routinely produce
//! values past 1e50.

mod regression;

pub use regression::{linear_fit, LinearFit};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::{per_minute_to_per_second, GAS_CONSTANT};
use crate::error::{Error, Result};
use crate::preprocess::{self, AlphaCurve, ConversionBounds};
use crate::tga::{self, TgaCurve};

/// Doyle's linear approximation of the temperature integral, natural-log
/// form: `ln p(x) ≈ −5.331 − 1.052·x`.
pub const DOYLE_INTERCEPT: f64 = 5.331;
pub const DOYLE_SLOPE: f64 = 1.052;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Friedman,
    #[serde(rename = "KAS")]
    Kas,
    #[serde(rename = "FWO")]
    Fwo,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Friedman, Method::Kas, Method::Fwo];

    pub fn label(self) -> &'static str {
        match self {
            Method::Friedman => "Friedman",
            Method::Kas => "KAS",
            Method::Fwo => "FWO",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Reaction-order model `f(α) = (1−α)^n`, with the matching integral form
/// `g(α) = ∫ dα/f(α)`. Order 1 is F1: `g(α) = −ln(1−α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionModel {
    pub order: f64,
}

impl Default for ReactionModel {
    fn default() -> Self {
        ReactionModel { order: 1.0 }
    }
}

impl ReactionModel {
    pub fn new(order: f64) -> Result<Self> {
        if !(order > 0.0) || !order.is_finite() {
            return Err(Error::Config(format!("reaction order {order} must be > 0")));
        }
        Ok(ReactionModel { order })
    }

    /// Accepts `F1`, `F2`, `F1.5` or a bare order.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let num = t.strip_prefix('F').or_else(|| t.strip_prefix('f')).unwrap_or(t);
        let order = num
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("unknown reaction model {s:?}")))?;
        Self::new(order)
    }

    pub fn tag(&self) -> String {
        format!("F{}", self.order)
    }

    pub fn f(&self, alpha: f64) -> f64 {
        (1.0 - alpha).powf(self.order)
    }

    pub fn g(&self, alpha: f64) -> f64 {
        let n = self.order;
        if (n - 1.0).abs() < 1e-12 {
            -(1.0 - alpha).ln()
        } else {
            ((1.0 - alpha).powf(1.0 - n) - 1.0) / (n - 1.0)
        }
    }
}

/// One heating rate's contribution at fixed α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceRow {
    /// Heating rate, K/s.
    pub beta: f64,
    pub temperature_k: f64,
    /// dα/dt, 1/s.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoconversionalSlice {
    pub alpha: f64,
    pub rows: Vec<SliceRow>,
}

impl IsoconversionalSlice {
    fn validate(&self) -> Result<()> {
        if self.rows.len() < 3 {
            return Err(Error::Input(format!(
                "need >=3 heating rates at alpha {}, got {}",
                self.alpha,
                self.rows.len()
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        for r in &self.rows {
            if !(r.temperature_k > 0.0) || !(r.beta > 0.0) {
                return Err(Error::Domain("temperatures and heating rates must be > 0".into()));
            }
        }
        Ok(())
    }

    fn inverse_temperatures(&self) -> Vec<f64> {
        self.rows.iter().map(|r| 1.0 / r.temperature_k).collect()
    }
}

/// Result of one method at one conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticEstimate {
    pub method: Method,
    pub alpha: f64,
    /// Activation energy, J/mol.
    pub ea: f64,
    /// Natural log of the pre-exponential factor (A in 1/s).
    pub ln_a: f64,
    pub r_squared: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl KineticEstimate {
    pub fn a_per_s(&self) -> f64 {
        self.ln_a.exp()
    }

    pub fn ea_kj_mol(&self) -> f64 {
        self.ea / 1000.0
    }
}

fn finish(method: Method, alpha: f64, fit: LinearFit, ea: f64, ln_a: f64) -> Result<KineticEstimate> {
    if !ea.is_finite() || !ln_a.is_finite() {
        return Err(Error::Domain(format!("{method} fit at alpha {alpha} gave non-finite parameters")));
    }
    Ok(KineticEstimate {
        method,
        alpha,
        ea,
        ln_a,
        r_squared: fit.r_squared,
        slope: fit.slope,
        intercept: fit.intercept,
    })
}

fn require_positive_ea(method: Method, alpha: f64, ea: f64) -> Result<()> {
    if ea > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{method} gives Ea = {:.3} kJ/mol at alpha {alpha}; A is undefined",
            ea / 1000.0
        )))
    }
}

/// Differential method: ln(dα/dt) against 1/T.
pub fn friedman(slice: &IsoconversionalSlice, model: ReactionModel) -> Result<KineticEstimate> {
    slice.validate()?;
    if let Some(r) = slice.rows.iter().find(|r| !(r.rate > 0.0)) {
        return Err(Error::Domain(format!(
            "non-positive rate {} at alpha {} (T = {} K)",
            r.rate, slice.alpha, r.temperature_k
        )));
    }
    let y: Vec<f64> = slice.rows.iter().map(|r| r.rate.ln()).collect();
    let fit = linear_fit(&slice.inverse_temperatures(), &y)?;
    let ea = -fit.slope * GAS_CONSTANT;
    let ln_a = fit.intercept - model.f(slice.alpha).ln();
    finish(Method::Friedman, slice.alpha, fit, ea, ln_a)
}

/// Kissinger–Akahira–Sunose: ln(β/T²) against 1/T.
pub fn kas(slice: &IsoconversionalSlice, model: ReactionModel) -> Result<KineticEstimate> {
    slice.validate()?;
    let y: Vec<f64> = slice
        .rows
        .iter()
        .map(|r| (r.beta / (r.temperature_k * r.temperature_k)).ln())
        .collect();
    let fit = linear_fit(&slice.inverse_temperatures(), &y)?;
    let ea = -fit.slope * GAS_CONSTANT;
    require_positive_ea(Method::Kas, slice.alpha, ea)?;
    let ln_a = (ea * model.g(slice.alpha) / GAS_CONSTANT).ln() + fit.intercept;
    finish(Method::Kas, slice.alpha, fit, ea, ln_a)
}

/// Flynn–Wall–Ozawa with Doyle's approximation: ln(β) against 1/T.
pub fn fwo(slice: &IsoconversionalSlice, model: ReactionModel) -> Result<KineticEstimate> {
    slice.validate()?;
    let y: Vec<f64> = slice.rows.iter().map(|r| r.beta.ln()).collect();
    let fit = linear_fit(&slice.inverse_temperatures(), &y)?;
    let ea = -fit.slope * GAS_CONSTANT / DOYLE_SLOPE;
    require_positive_ea(Method::Fwo, slice.alpha, ea)?;
    let ln_a = (GAS_CONSTANT * model.g(slice.alpha) / ea).ln() + fit.intercept + DOYLE_INTERCEPT;
    finish(Method::Fwo, slice.alpha, fit, ea, ln_a)
}

pub fn estimate(method: Method, slice: &IsoconversionalSlice, model: ReactionModel) -> Result<KineticEstimate> {
    match method {
        Method::Friedman => friedman(slice, model),
        Method::Kas => kas(slice, model),
        Method::Fwo => fwo(slice, model),
    }
}

/// Knobs of the full isoconversional pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub alpha_grid: Vec<f64>,
    pub model: ReactionModel,
    /// Odd moving-average width used before differentiating.
    pub smooth_window: usize,
    /// Uniform temperature step, K.
    pub resample_step: f64,
    /// Temperature (°C) at which m0 is read.
    pub m0_at_c: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            alpha_grid: preprocess::default_alpha_grid(),
            model: ReactionModel::default(),
            smooth_window: preprocess::DEFAULT_SMOOTH_WINDOW,
            resample_step: preprocess::DEFAULT_RESAMPLE_STEP,
            m0_at_c: preprocess::DEFAULT_M0_AT_C,
        }
    }
}

/// Estimates of all methods at one conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub estimates: Vec<KineticEstimate>,
}

impl AlphaRow {
    pub fn get(&self, method: Method) -> Option<&KineticEstimate> {
        self.estimates.iter().find(|e| e.method == method)
    }
}

/// A conversion that was dropped from the table, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedAlpha {
    pub alpha: f64,
    pub reason: String,
}

/// Per-α kinetic parameters of one sample, all methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisTable {
    pub sample_id: String,
    pub rows: Vec<AlphaRow>,
    pub excluded: Vec<ExcludedAlpha>,
}

impl AnalysisTable {
    /// Builds a table from precomputed estimates, grouping them by α.
    pub fn from_estimates(sample_id: impl Into<String>, estimates: &[KineticEstimate]) -> Self {
        let mut rows: Vec<AlphaRow> = Vec::new();
        for e in estimates {
            match rows.iter_mut().find(|r| r.alpha == e.alpha) {
                Some(r) => r.estimates.push(*e),
                None => rows.push(AlphaRow { alpha: e.alpha, estimates: vec![*e] }),
            }
        }
        rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        for r in &mut rows {
            r.estimates.sort_by_key(|e| e.method);
        }
        AnalysisTable { sample_id: sample_id.into(), rows, excluded: Vec::new() }
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut m: Vec<Method> = self.rows.iter().flat_map(|r| r.estimates.iter().map(|e| e.method)).collect();
        m.sort();
        m.dedup();
        m
    }

    pub fn column(&self, method: Method) -> Vec<KineticEstimate> {
        self.rows.iter().filter_map(|r| r.get(method).copied()).collect()
    }

    /// Arithmetic mean of Ea (J/mol) over the included conversions.
    pub fn average_ea(&self, method: Method) -> Option<f64> {
        let col = self.column(method);
        if col.is_empty() {
            return None;
        }
        Some(col.iter().map(|e| e.ea).sum::<f64>() / col.len() as f64)
    }

    pub fn estimates(&self) -> impl Iterator<Item = &KineticEstimate> {
        self.rows.iter().flat_map(|r| r.estimates.iter())
    }
}

/// Gathers the per-heating-rate points at conversion `alpha`.
pub fn build_slice(curves: &[AlphaCurve], alpha: f64) -> Result<IsoconversionalSlice> {
    let rows = curves
        .iter()
        .map(|c| {
            let (t, dadt) = c.point_at_alpha(alpha)?;
            let beta = per_minute_to_per_second(c.heating_rate);
            Ok(SliceRow { beta, temperature_k: t, rate: beta * dadt })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IsoconversionalSlice { alpha, rows })
}

/// Converts raw runs into conversion curves using the pipeline defaults.
pub fn prepare_alpha_curves(curves: &[TgaCurve], cfg: &AnalysisConfig) -> Result<Vec<AlphaCurve>> {
    curves
        .iter()
        .map(|c| {
            let uniform = tga::resample_uniform(c, cfg.resample_step)?;
            let bounds = ConversionBounds::from_curve(&uniform, cfg.m0_at_c);
            preprocess::compute_alpha(&uniform, bounds, cfg.smooth_window)
        })
        .collect()
}

/// Runs all three methods over the α grid.
///
/// Conversions that some run never reaches, or where any method fails
/// (non-positive rate, non-positive Ea), are recorded in `excluded` and left
/// out of the averages.
pub fn run_analysis(curves: &[TgaCurve], cfg: &AnalysisConfig) -> Result<AnalysisTable> {
    if curves.len() < 3 {
        return Err(Error::Input(format!("need ≥3 heating rates, got {} curves", curves.len())));
    }
    let spec = &curves[0].spec;
    if let Some(c) = curves.iter().find(|c| &c.spec != spec) {
        return Err(Error::Input(format!(
            "curves mix samples {:?} and {:?}",
            spec.sample_id, c.spec.sample_id
        )));
    }
    let mut betas: Vec<f64> = curves.iter().map(|c| c.heating_rate).collect();
    betas.sort_by(f64::total_cmp);
    if betas.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Input("heating rates must be distinct".into()));
    }
    if cfg.alpha_grid.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()));
    }
    let alpha_curves = prepare_alpha_curves(curves, cfg)?;
    alpha_table(&spec.sample_id, &alpha_curves, &cfg.alpha_grid, cfg.model)
}

/// Method fits over an α grid from already prepared conversion curves.
pub fn alpha_table(
    sample_id: &str,
    alpha_curves: &[AlphaCurve],
    alpha_grid: &[f64],
    model: ReactionModel,
) -> Result<AnalysisTable> {
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for &alpha in alpha_grid {
        let attempt = build_slice(alpha_curves, alpha).and_then(|slice| {
            Method::ALL
                .iter()
                .map(|&m| estimate(m, &slice, model))
                .collect::<Result<Vec<_>>>()
        });
        match attempt {
            Ok(estimates) => rows.push(AlphaRow { alpha, estimates }),
            Err(e) => excluded.push(ExcludedAlpha { alpha, reason: e.to_string() }),
        }
    }
    Ok(AnalysisTable { sample_id: sample_id.to_string(), rows, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BETAS_K_PER_MIN: [f64; 4] = [5.0, 10.0, 15.0, 20.0];

    fn temps() -> [f64; 4] {
        [560.0, 575.0, 585.0, 592.0]
    }

    #[test]
    fn friedman_exact_line() {
        let rows = temps()
            .iter()
            .zip(BETAS_K_PER_MIN)
            .map(|(&t, b)| SliceRow {
                beta: b / 60.0,
                temperature_k: t,
                rate: (30.0 - 200_000.0 / (GAS_CONSTANT * t)).exp(),
            })
            .collect();
        let s = IsoconversionalSlice { alpha: 0.5, rows };
        let e = friedman(&s, ReactionModel::default()).unwrap();
        assert!((e.ea - 200_000.0).abs() < 1e-4);
        assert!((e.r_squared - 1.0).abs() < 1e-9);
        // e^30 / f(0.5) with f = 1 − α
        let expected_a = 30f64.exp() / 0.5;
        assert!((e.a_per_s() / expected_a - 1.0).abs() < 1e-8);
        assert!((e.a_per_s() - 2.137e13).abs() / 2.137e13 < 1e-3);
    }

    #[test]
    fn friedman_rate_scaling_moves_only_a() {
        let rows: Vec<SliceRow> = temps()
            .iter()
            .zip(BETAS_K_PER_MIN)
            .map(|(&t, b)| SliceRow { beta: b / 60.0, temperature_k: t, rate: 1e-3 * (t / 500.0).powi(40) })
            .collect();
        let s = IsoconversionalSlice { alpha: 0.3, rows: rows.clone() };
        let scaled = IsoconversionalSlice {
            alpha: 0.3,
            rows: rows.iter().map(|r| SliceRow { rate: r.rate * 7.5, ..*r }).collect(),
        };
        let a = friedman(&s, ReactionModel::default()).unwrap();
        let b = friedman(&scaled, ReactionModel::default()).unwrap();
        assert!((a.ea - b.ea).abs() <= 1e-12 * a.ea.abs());
        assert!((b.ln_a - a.ln_a - 7.5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn kas_exact_line() {
        // choose beta so that ln(beta/T^2) = C − Ea/(R·T) holds exactly
        let rows = temps()
            .iter()
            .map(|&t| SliceRow {
                beta: t * t * (-5.0 - 200_000.0 / (GAS_CONSTANT * t)).exp(),
                temperature_k: t,
                rate: 1.0,
            })
            .collect();
        let e = kas(&IsoconversionalSlice { alpha: 0.4, rows }, ReactionModel::default()).unwrap();
        assert!((e.ea - 200_000.0).abs() < 1e-4);
        assert!((e.r_squared - 1.0).abs() < 1e-9);
        let g = -(0.6f64).ln();
        let expected_ln_a = (200_000.0 * g / GAS_CONSTANT).ln() - 5.0;
        assert!((e.ln_a - expected_ln_a).abs() < 1e-6);
    }

    #[test]
    fn fwo_exact_line_and_rank_error() {
        let rows = temps()
            .iter()
            .map(|&t| SliceRow {
                beta: (4.0 - DOYLE_SLOPE * 150_000.0 / (GAS_CONSTANT * t)).exp(),
                temperature_k: t,
                rate: 1.0,
            })
            .collect();
        let e = fwo(&IsoconversionalSlice { alpha: 0.2, rows }, ReactionModel::default()).unwrap();
        assert!((e.ea - 150_000.0).abs() < 1e-4);
        assert!((e.r_squared - 1.0).abs() < 1e-9);

        let flat = IsoconversionalSlice {
            alpha: 0.2,
            rows: BETAS_K_PER_MIN
                .iter()
                .map(|b| SliceRow { beta: b / 60.0, temperature_k: 600.0, rate: 1.0 })
                .collect(),
        };
        assert!(matches!(fwo(&flat, ReactionModel::default()), Err(Error::Rank(_))));
    }

    #[test]
    fn friedman_rejects_nonpositive_rate() {
        let mut rows: Vec<SliceRow> = temps()
            .iter()
            .zip(BETAS_K_PER_MIN)
            .map(|(&t, b)| SliceRow { beta: b / 60.0, temperature_k: t, rate: 1e-3 })
            .collect();
        rows[2].rate = 0.0;
        let e = friedman(&IsoconversionalSlice { alpha: 0.5, rows }, ReactionModel::default());
        assert!(matches!(e, Err(Error::Domain(_))));
    }

    #[test]
    fn slice_needs_three_rates() {
        let rows = vec![
            SliceRow { beta: 0.1, temperature_k: 600.0, rate: 1e-3 },
            SliceRow { beta: 0.2, temperature_k: 610.0, rate: 2e-3 },
        ];
        assert!(kas(&IsoconversionalSlice { alpha: 0.5, rows }, ReactionModel::default()).is_err());
    }

    #[test]
    fn reaction_model_consistency() {
        for order in [0.5, 1.0, 2.0, 3.0] {
            let m = ReactionModel::new(order).unwrap();
            assert_eq!(m.g(0.0), 0.0);
            // g' = 1/f by central differences
            for a in [0.1, 0.4, 0.7] {
                let h = 1e-6;
                let dg = (m.g(a + h) - m.g(a - h)) / (2.0 * h);
                assert!((dg * m.f(a) - 1.0).abs() < 1e-6, "order {order} alpha {a}");
            }
        }
        assert_eq!(ReactionModel::parse("F1").unwrap().order, 1.0);
        assert_eq!(ReactionModel::parse("2").unwrap().order, 2.0);
        assert!(ReactionModel::parse("D3").is_err());
    }

    #[test]
    fn table_averages_and_grouping() {
        let mk = |m, alpha, ea| KineticEstimate { method: m, alpha, ea, ln_a: 1.0, r_squared: 1.0, slope: 0.0, intercept: 0.0 };
        let t = AnalysisTable::from_estimates(
            "x",
            &[mk(Method::Kas, 0.2, 3.0), mk(Method::Friedman, 0.1, 1.0), mk(Method::Kas, 0.1, 5.0)],
        );
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].estimates[0].method, Method::Friedman);
        assert_eq!(t.average_ea(Method::Kas), Some(4.0));
        assert_eq!(t.average_ea(Method::Fwo), None);
        assert_eq!(t.methods(), vec![Method::Friedman, Method::Kas]);
    }
}
