//! Per-row features for the mass-loss predictor.
//!
//! Model 1 sees blend ratio, heating rate and temperature. Model 2 adds the
//! remaining cellulose, hemicellulose and lignin content, each depleted
//! linearly across its decomposition window as temperature rises.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::constants::kelvin_to_celsius;
use crate::error::{Error, Result};
use crate::tga::TgaCurve;

/// Decomposition windows in °C.
pub const HEMICELLULOSE_WINDOW_C: (f64, f64) = (225.0, 325.0);
pub const CELLULOSE_WINDOW_C: (f64, f64) = (315.0, 405.0);
pub const LIGNIN_WINDOW_C: (f64, f64) = (160.0, 900.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Model1,
    Model2,
}

impl FeatureMode {
    pub fn feature_count(self) -> usize {
        match self {
            FeatureMode::Model1 => 4,
            FeatureMode::Model2 => 7,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "model1" | "1" => Ok(FeatureMode::Model1),
            "model2" | "2" => Ok(FeatureMode::Model2),
            _ => Err(Error::Config(format!("unknown feature mode {s:?}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureMode::Model1 => "model1",
            FeatureMode::Model2 => "model2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub curve_id: String,
    pub ds_pct: f64,
    pub scg_pct: f64,
    /// °C/min
    pub heating_rate: f64,
    pub temperature_c: f64,
    pub cellulose_t: Option<f64>,
    pub hemicellulose_t: Option<f64>,
    pub lignin_t: Option<f64>,
    /// Target: mass relative to the initial sample, %.
    pub mass_pct: f64,
}

impl FeatureRow {
    /// Model input vector: 4 entries for Model 1, 7 for Model 2.
    pub fn features(&self) -> Vec<f64> {
        let mut v = vec![self.ds_pct, self.scg_pct, self.heating_rate, self.temperature_c];
        if let (Some(c), Some(h), Some(l)) = (self.cellulose_t, self.hemicellulose_t, self.lignin_t) {
            v.extend([c, h, l]);
        }
        v
    }
}

/// Share of a fibre component still present at `t_c`: 1 below the window,
/// linear inside it, 0 above.
pub fn lignocellulosic_remaining(t_c: f64, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Domain(format!("window start {lo} must be below end {hi}")));
    }
    Ok(((hi - t_c) / (hi - lo)).clamp(0.0, 1.0))
}

/// One feature row per curve point. Model 2 needs non-zero fibre metadata.
pub fn build_features(curve: &TgaCurve, mode: FeatureMode) -> Result<Vec<FeatureRow>> {
    let s = &curve.spec;
    if mode == FeatureMode::Model2 && s.cellulose_pct + s.hemicellulose_pct + s.lignin_pct <= 0.0 {
        return Err(Error::Input(format!(
            "sample {:?} has no fibre analysis; Model 2 features need it",
            s.sample_id
        )));
    }
    let curve_id = curve.curve_id();
    curve
        .points
        .iter()
        .map(|p| {
            let t_c = kelvin_to_celsius(p.temperature_k);
            let fibre = |pct: f64, w| lignocellulosic_remaining(t_c, w).map(|r| Some(pct * r));
            let (cellulose_t, hemicellulose_t, lignin_t) = match mode {
                FeatureMode::Model1 => (None, None, None),
                FeatureMode::Model2 => (
                    fibre(s.cellulose_pct, CELLULOSE_WINDOW_C)?,
                    fibre(s.hemicellulose_pct, HEMICELLULOSE_WINDOW_C)?,
                    fibre(s.lignin_pct, LIGNIN_WINDOW_C)?,
                ),
            };
            Ok(FeatureRow {
                curve_id: curve_id.clone(),
                ds_pct: s.ds_fraction * 100.0,
                scg_pct: s.scg_fraction * 100.0,
                heating_rate: curve.heating_rate,
                temperature_c: t_c,
                cellulose_t,
                hemicellulose_t,
                lignin_t,
                mass_pct: p.mass_fraction * 100.0,
            })
        })
        .collect()
}

pub fn features_to_csv(rows: &[FeatureRow]) -> String {
    let model2 = rows.first().is_some_and(|r| r.cellulose_t.is_some());
    let mut out = String::from("curve_id,ds_pct,scg_pct,heating_rate,temperature_c");
    if model2 {
        out.push_str(",cellulose_t,hemicellulose_t,lignin_t");
    }
    out.push_str(",mass_pct\n");
    for r in rows {
        let _ = write!(out, "{},{},{},{},{:.4}", r.curve_id, r.ds_pct, r.scg_pct, r.heating_rate, r.temperature_c);
        if model2 {
            let _ = write!(
                out,
                ",{:.6},{:.6},{:.6}",
                r.cellulose_t.unwrap_or(0.0),
                r.hemicellulose_t.unwrap_or(0.0),
                r.lignin_t.unwrap_or(0.0)
            );
        }
        let _ = writeln!(out, ",{:.6}", r.mass_pct);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::celsius_to_kelvin;
    use crate::tga::{blend_spec, SampleSpec, TgaPoint};

    #[test]
    fn remaining_fraction_cases() {
        assert_eq!(lignocellulosic_remaining(200.0, CELLULOSE_WINDOW_C).unwrap(), 1.0);
        assert!((lignocellulosic_remaining(360.0, CELLULOSE_WINDOW_C).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(lignocellulosic_remaining(405.0, CELLULOSE_WINDOW_C).unwrap(), 0.0);
        assert_eq!(lignocellulosic_remaining(900.0, LIGNIN_WINDOW_C).unwrap(), 0.0);
        assert!(lignocellulosic_remaining(1.0, (10.0, 10.0)).is_err());
    }

    fn blend1_curve(temps_c: &[f64]) -> TgaCurve {
        let spec = blend_spec(&SampleSpec::date_seeds(), &SampleSpec::spent_coffee_grounds(), 0.75).unwrap();
        let points = temps_c
            .iter()
            .enumerate()
            .map(|(i, &t)| TgaPoint { time_s: i as f64, temperature_k: celsius_to_kelvin(t), mass_fraction: 1.0 - 0.001 * i as f64 })
            .collect();
        TgaCurve::new(spec, 15.0, points).unwrap()
    }

    #[test]
    fn blend1_fibre_features() {
        let c = blend1_curve(&[25.0, 405.0]);
        let rows = build_features(&c, FeatureMode::Model2).unwrap();
        assert!((rows[0].cellulose_t.unwrap() - 24.875).abs() < 1e-9);
        assert!((rows[0].ds_pct - 75.0).abs() < 1e-12);
        assert!(rows[1].cellulose_t.unwrap().abs() < 1e-9);
        assert_eq!(rows[0].features().len(), 7);
    }

    #[test]
    fn model1_has_four_features() {
        let c = blend1_curve(&[25.0, 100.0, 300.0]);
        for r in build_features(&c, FeatureMode::Model1).unwrap() {
            assert_eq!(r.features().len(), 4);
        }
    }

    #[test]
    fn model2_needs_fibre_metadata() {
        let spec = SampleSpec::new("bare", 1.0, 0.0, 0.0, 0.0).unwrap();
        let c = TgaCurve::new(
            spec,
            10.0,
            vec![TgaPoint { time_s: 0.0, temperature_k: 300.0, mass_fraction: 1.0 }],
        )
        .unwrap();
        assert!(matches!(build_features(&c, FeatureMode::Model2), Err(Error::Input(_))));
    }
}
