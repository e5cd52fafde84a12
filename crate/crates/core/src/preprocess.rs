//! Conversion, DTG, stage peak detection and isoconversional temperature lookup.

use serde::{Deserialize, Serialize};

use crate::constants::celsius_to_kelvin;
use crate::error::{Error, Result};
use crate::tga::TgaCurve;

/// Default moving-average width for DTG on a 0.5 K grid.
pub const DEFAULT_SMOOTH_WINDOW: usize = 9;

/// Default resampling step before differentiation, K.
pub const DEFAULT_RESAMPLE_STEP: f64 = 0.5;

/// Temperature (°C) where the moisture stage is over and `m0` is read.
pub const DEFAULT_M0_AT_C: f64 = 160.0;

/// A window only reports a peak if its maximum |dm/dT| reaches this share
/// of the global maximum.
pub const PEAK_THRESHOLD_FRACTION: f64 = 0.05;

/// The conversion grid 0.1, 0.2, ..., 0.7.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=7).map(|i| i as f64 / 10.0).collect()
}

/// Mass fractions bounding the conversion: α = (m0 − m)/(m0 − mf).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionBounds {
    pub m0: f64,
    pub mf: f64,
}

impl ConversionBounds {
    /// `m0` is the mass at `m0_at_c` °C (interpolated), `mf` the final mass.
    pub fn from_curve(curve: &TgaCurve, m0_at_c: f64) -> Self {
        let m0 = curve.mass_at_temperature(celsius_to_kelvin(m0_at_c));
        let mf = curve.points.last().map(|p| p.mass_fraction).unwrap_or(m0);
        ConversionBounds { m0, mf }
    }
}

/// Conversion series of one run on a uniform temperature grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaCurve {
    pub curve_id: String,
    /// Heating rate of the parent curve, K/min.
    pub heating_rate: f64,
    pub bounds: ConversionBounds,
    pub temperature_k: Vec<f64>,
    /// Non-decreasing, within [0, 1].
    pub alpha: Vec<f64>,
    /// dα/dT in 1/K.
    pub dalpha_dt: Vec<f64>,
}

/// Raw (unenforced) conversion of a single mass reading.
pub fn conversion(mass: f64, bounds: ConversionBounds) -> f64 {
    (bounds.m0 - mass) / (bounds.m0 - bounds.mf)
}

/// Computes α(T) and dα/dT on a uniformly resampled curve.
///
/// α is clamped to [0, 1] and then made monotone with a running maximum.
/// dα/dT is −(dm/dT)/(m0 − mf) with dm/dT from [`compute_dtg`].
pub fn compute_alpha(curve: &TgaCurve, bounds: ConversionBounds, smooth_window: usize) -> Result<AlphaCurve> {
    if !(bounds.m0 > bounds.mf) {
        return Err(Error::Domain(format!(
            "m0 ({}) must exceed mf ({})",
            bounds.m0, bounds.mf
        )));
    }
    let masses = curve.masses();
    let lo = masses.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    const TOL: f64 = 1e-6;
    if bounds.mf < lo - TOL || bounds.m0 > hi + TOL {
        return Err(Error::Domain(format!(
            "bounds [{}, {}] outside observed mass range [{lo}, {hi}]",
            bounds.mf, bounds.m0
        )));
    }
    if curve.points.len() < smooth_window {
        return Err(Error::Resolution(format!(
            "curve has {} points, shorter than smoothing window {smooth_window}",
            curve.points.len()
        )));
    }
    let dtg = compute_dtg(curve, smooth_window)?;
    let span = bounds.m0 - bounds.mf;
    let mut running = 0.0_f64;
    let alpha = masses
        .iter()
        .map(|&m| {
            running = running.max(conversion(m, bounds).clamp(0.0, 1.0));
            running
        })
        .collect();
    Ok(AlphaCurve {
        curve_id: curve.curve_id(),
        heating_rate: curve.heating_rate,
        bounds,
        temperature_k: curve.temperatures(),
        alpha,
        dalpha_dt: dtg.iter().map(|&(_, d)| -d / span).collect(),
    })
}

/// dm/dT on a uniform grid: centered moving average of width `smooth_window`
/// (shrinking symmetrically at the ends), then centered differences with
/// one-sided differences at the endpoints.
pub fn compute_dtg(curve: &TgaCurve, smooth_window: usize) -> Result<Vec<(f64, f64)>> {
    let step = curve
        .uniform_step()
        .ok_or_else(|| Error::Precondition("DTG requires a uniform temperature grid; resample first".into()))?;
    let n = curve.points.len();
    if smooth_window == 0 || smooth_window.is_multiple_of(2) {
        return Err(Error::Precondition(format!("smoothing window {smooth_window} must be odd and >= 1")));
    }
    if smooth_window > 1 && smooth_window * 4 >= n {
        return Err(Error::Resolution(format!(
            "smoothing window {smooth_window} must be below a quarter of the {n} points"
        )));
    }
    let masses = curve.masses();
    let smoothed = moving_average(&masses, smooth_window);
    let deriv = differentiate(&smoothed, step);
    Ok(curve.points.iter().map(|p| p.temperature_k).zip(deriv).collect())
}

fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let slice = &values[i - h..=i + h];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

fn differentiate(values: &[f64], step: f64) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                (values[1] - values[0]) / step
            } else if i == n - 1 {
                (values[n - 1] - values[n - 2]) / step
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * step)
            }
        })
        .collect()
}

/// Decomposition stages of lignocellulosic biomass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Moisture,
    Hemicellulose,
    Cellulose,
    Lignin,
}

impl Stage {
    pub fn label(self) -> &'static str {
        match self {
            Stage::Moisture => "moisture",
            Stage::Hemicellulose => "hemicellulose",
            Stage::Cellulose => "cellulose",
            Stage::Lignin => "lignin",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        match s.trim().to_ascii_lowercase().as_str() {
            "moisture" => Some(Stage::Moisture),
            "hemicellulose" => Some(Stage::Hemicellulose),
            "cellulose" => Some(Stage::Cellulose),
            "lignin" => Some(Stage::Lignin),
            _ => None,
        }
    }
}

/// Temperature window, in kelvin, in which a stage peak is searched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageWindow {
    pub stage: Stage,
    pub lo_k: f64,
    pub hi_k: f64,
}

impl StageWindow {
    pub fn celsius(stage: Stage, lo_c: f64, hi_c: f64) -> Self {
        StageWindow { stage, lo_k: celsius_to_kelvin(lo_c), hi_k: celsius_to_kelvin(hi_c) }
    }
}

/// Moisture below 160 °C, hemicellulose 225–325 °C, cellulose 315–405 °C,
/// lignin 160–900 °C.
pub fn default_stage_windows() -> Vec<StageWindow> {
    vec![
        StageWindow::celsius(Stage::Moisture, 20.0, 160.0),
        StageWindow::celsius(Stage::Hemicellulose, 225.0, 325.0),
        StageWindow::celsius(Stage::Cellulose, 315.0, 405.0),
        StageWindow::celsius(Stage::Lignin, 160.0, 900.0),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtgPeak {
    pub stage: Stage,
    pub t_peak_k: f64,
    /// Maximum |dm/dT| inside the window, 1/K.
    pub peak_rate: f64,
    pub window: (f64, f64),
}

/// Locates the maximum |dm/dT| in each stage window.
///
/// A window yields no peak if its maximum is below
/// [`PEAK_THRESHOLD_FRACTION`] of the global maximum. Peaks come back sorted
/// by temperature.
pub fn find_peaks(dtg: &[(f64, f64)], windows: &[StageWindow]) -> Vec<DtgPeak> {
    let global = dtg.iter().map(|&(_, d)| d.abs()).fold(0.0_f64, f64::max);
    if !(global > 0.0) {
        return Vec::new();
    }
    let mut peaks: Vec<DtgPeak> = windows
        .iter()
        .filter_map(|w| {
            let (t, rate) = dtg
                .iter()
                .filter(|(t, _)| *t >= w.lo_k && *t <= w.hi_k)
                .map(|&(t, d)| (t, d.abs()))
                .fold(None, |best: Option<(f64, f64)>, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                })?;
            (rate > 0.0 && rate >= PEAK_THRESHOLD_FRACTION * global).then_some(DtgPeak {
                stage: w.stage,
                t_peak_k: t,
                peak_rate: rate,
                window: (w.lo_k, w.hi_k),
            })
        })
        .collect();
    peaks.sort_by(|a, b| a.t_peak_k.total_cmp(&b.t_peak_k).then(a.stage.cmp(&b.stage)));
    peaks
}

impl AlphaCurve {
    /// Conversion range reached by this run.
    pub fn achieved_range(&self) -> (f64, f64) {
        (
            self.alpha.first().copied().unwrap_or(0.0),
            self.alpha.last().copied().unwrap_or(0.0),
        )
    }

    /// Temperature and dα/dT at conversion `alpha`, linearly interpolated.
    pub fn point_at_alpha(&self, alpha: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.achieved_range();
        if !(alpha > 0.0 && alpha < 1.0) || alpha < lo || alpha > hi {
            return Err(Error::AlphaRange { alpha, lo, hi });
        }
        let j = self.alpha.partition_point(|&a| a < alpha);
        if self.alpha[j] == alpha || j == 0 {
            return Ok((self.temperature_k[j], self.dalpha_dt[j]));
        }
        let (a0, a1) = (self.alpha[j - 1], self.alpha[j]);
        let w = (alpha - a0) / (a1 - a0);
        let lerp = |v: &[f64]| v[j - 1] + w * (v[j] - v[j - 1]);
        Ok((lerp(&self.temperature_k), lerp(&self.dalpha_dt)))
    }
}

/// Temperature at which the run reaches conversion `alpha`.
pub fn temperature_at_alpha(alpha_curve: &AlphaCurve, alpha: f64) -> Result<f64> {
    alpha_curve.point_at_alpha(alpha).map(|(t, _)| t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tga::{SampleSpec, TgaPoint};

    fn curve_from(temps: &[f64], masses: &[f64]) -> TgaCurve {
        let points = temps
            .iter()
            .zip(masses)
            .enumerate()
            .map(|(i, (&t, &m))| TgaPoint { time_s: i as f64, temperature_k: t, mass_fraction: m })
            .collect();
        TgaCurve::new(SampleSpec::date_seeds(), 10.0, points).unwrap()
    }

    fn grid(n: usize, t0: f64, step: f64) -> Vec<f64> {
        (0..n).map(|i| t0 + step * i as f64).collect()
    }

    #[test]
    fn conversion_midpoint_and_bounds() {
        let b = ConversionBounds { m0: 1.0, mf: 0.2 };
        assert!((conversion(0.6, b) - 0.5).abs() < 1e-15);
        assert_eq!(conversion(1.0, b), 0.0);
        assert_eq!(conversion(0.2, b), 1.0);
    }

    #[test]
    fn alpha_rejects_inverted_bounds() {
        let t = grid(50, 400.0, 1.0);
        let m: Vec<f64> = (0..50).map(|i| 1.0 - 0.01 * i as f64).collect();
        let c = curve_from(&t, &m);
        let e = compute_alpha(&c, ConversionBounds { m0: 0.5, mf: 0.6 }, 1);
        assert!(matches!(e, Err(Error::Domain(_))));
        let e = compute_alpha(&c, ConversionBounds { m0: 0.9, mf: 0.6 }, 51);
        assert!(matches!(e, Err(Error::Resolution(_))));
    }

    #[test]
    fn dtg_of_line_is_constant() {
        let t = grid(200, 400.0, 0.5);
        let m: Vec<f64> = t.iter().map(|t| 1.0 - 0.001 * (t - 400.0)).collect();
        let c = curve_from(&t, &m);
        let d = compute_dtg(&c, 9).unwrap();
        for &(_, v) in &d[1..d.len() - 1] {
            assert!((v + 0.001).abs() < 1e-12);
        }
        let flat = curve_from(&t, &vec![0.7; 200]);
        assert!(compute_dtg(&flat, 9).unwrap().iter().all(|&(_, v)| v.abs() < 1e-12));
    }

    #[test]
    fn dtg_exact_for_quadratic_without_smoothing() {
        let t = grid(100, 300.0, 0.5);
        let m: Vec<f64> = t.iter().map(|t| 0.9 - 1e-4 * (t - 300.0) - 2e-6 * (t - 300.0).powi(2)).collect();
        let c = curve_from(&t, &m);
        let d = compute_dtg(&c, 1).unwrap();
        for &(tk, v) in &d[1..d.len() - 1] {
            let exact = -1e-4 - 4e-6 * (tk - 300.0);
            assert!((v - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn dtg_rejects_nonuniform_grid_and_even_window() {
        let mut t = grid(100, 300.0, 1.0);
        t[50] += 0.3;
        let c = curve_from(&t, &vec![0.5; 100]);
        assert!(matches!(compute_dtg(&c, 3), Err(Error::Precondition(_))));
        let c = curve_from(&grid(100, 300.0, 1.0), &vec![0.5; 100]);
        assert!(matches!(compute_dtg(&c, 4), Err(Error::Precondition(_))));
        assert!(matches!(compute_dtg(&c, 25), Err(Error::Resolution(_))));
    }

    #[test]
    fn flat_dtg_has_no_peaks() {
        let dtg: Vec<(f64, f64)> = grid(100, 400.0, 5.0).into_iter().map(|t| (t, 0.0)).collect();
        assert!(find_peaks(&dtg, &default_stage_windows()).is_empty());
    }

    #[test]
    fn small_window_maximum_is_suppressed() {
        let dtg: Vec<(f64, f64)> = grid(400, 300.0, 1.0)
            .into_iter()
            .map(|t| {
                let big = -0.01 * (-(t - 600.0).powi(2) / 200.0).exp();
                let tiny = -0.0001 * (-(t - 380.0).powi(2) / 50.0).exp();
                (t, big + tiny)
            })
            .collect();
        let windows = [
            StageWindow { stage: Stage::Moisture, lo_k: 350.0, hi_k: 420.0 },
            StageWindow { stage: Stage::Cellulose, lo_k: 560.0, hi_k: 650.0 },
        ];
        let peaks = find_peaks(&dtg, &windows);
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].stage, Stage::Cellulose);
        assert_eq!(peaks[0].t_peak_k, 600.0);
    }

    #[test]
    fn temperature_lookup_interpolates() {
        let ac = AlphaCurve {
            curve_id: "x".into(),
            heating_rate: 10.0,
            bounds: ConversionBounds { m0: 1.0, mf: 0.0 },
            temperature_k: vec![590.0, 600.0, 610.0, 620.0],
            alpha: vec![0.3, 0.4, 0.5, 0.6],
            dalpha_dt: vec![0.01, 0.02, 0.03, 0.04],
        };
        assert_eq!(temperature_at_alpha(&ac, 0.4).unwrap(), 600.0);
        assert!((temperature_at_alpha(&ac, 0.45).unwrap() - 605.0).abs() < 1e-9);
        let (_, rate) = ac.point_at_alpha(0.45).unwrap();
        assert!((rate - 0.025).abs() < 1e-12);
        match temperature_at_alpha(&ac, 0.7) {
            Err(Error::AlphaRange { lo, hi, .. }) => assert_eq!((lo, hi), (0.3, 0.6)),
            other => panic!("{other:?}"),
        }
        assert!(temperature_at_alpha(&ac, 0.2).is_err());
    }

    #[test]
    fn running_max_never_lowers_alpha() {
        let t = grid(60, 400.0, 1.0);
        let m: Vec<f64> = (0..60)
            .map(|i| 1.0 - 0.012 * i as f64 + if i % 7 == 3 { 0.004 } else { 0.0 })
            .collect();
        let c = curve_from(&t, &m);
        let b = ConversionBounds { m0: 1.0, mf: 0.3 };
        let ac = compute_alpha(&c, b, 1).unwrap();
        for (i, &a) in ac.alpha.iter().enumerate() {
            let raw = conversion(m[i], b).clamp(0.0, 1.0);
            assert!(a >= raw);
            // change bounded by the injected noise amplitude
            assert!(a - raw <= 0.004 / 0.7 + 1e-12);
            if i > 0 {
                assert!(a >= ac.alpha[i - 1]);
            }
        }
    }
}
