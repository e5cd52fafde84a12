//! TGA curve and sample metadata model, file IO and uniform resampling.
//!
//! On disk a run is a CSV file (`time_s,temperature_c,mass_pct`, or the
//! two-column `temperature_c,mass_pct` variant) plus a JSON sidecar with the
//! same stem carrying the sample description and heating rate. In memory
//! everything is kelvin, seconds and mass fraction of the first sample.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::{celsius_to_kelvin, kelvin_to_celsius};
use crate::error::{Error, Result};

const FRACTION_TOL: f64 = 1e-9;
const MIN_ROWS: usize = 10;

/// Optional proximate analysis, wet basis, in %.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proximate {
    pub ash_pct: f64,
    pub volatile_matter_pct: f64,
    pub fixed_carbon_pct: f64,
}

/// Identity and composition of a sample: blend ratio plus fibre analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub sample_id: String,
    pub ds_fraction: f64,
    pub scg_fraction: f64,
    pub cellulose_pct: f64,
    pub hemicellulose_pct: f64,
    pub lignin_pct: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proximate: Option<Proximate>,
}

impl SampleSpec {
    pub fn new(
        sample_id: impl Into<String>,
        ds_fraction: f64,
        cellulose_pct: f64,
        hemicellulose_pct: f64,
        lignin_pct: f64,
    ) -> Result<Self> {
        let spec = SampleSpec {
            sample_id: sample_id.into(),
            ds_fraction,
            scg_fraction: 1.0 - ds_fraction,
            cellulose_pct,
            hemicellulose_pct,
            lignin_pct,
            proximate: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Pure date seeds, fibre analysis of the reference feedstock.
    pub fn date_seeds() -> Self {
        SampleSpec {
            sample_id: "DS".into(),
            ds_fraction: 1.0,
            scg_fraction: 0.0,
            cellulose_pct: 22.5,
            hemicellulose_pct: 48.2,
            lignin_pct: 25.7,
            proximate: Some(Proximate {
                ash_pct: 1.2,
                volatile_matter_pct: 77.6,
                fixed_carbon_pct: 21.2,
            }),
        }
    }

    /// Pure spent coffee grounds.
    pub fn spent_coffee_grounds() -> Self {
        SampleSpec {
            sample_id: "SCG".into(),
            ds_fraction: 0.0,
            scg_fraction: 1.0,
            cellulose_pct: 32.0,
            hemicellulose_pct: 35.0,
            lignin_pct: 25.0,
            proximate: Some(Proximate {
                ash_pct: 1.8,
                volatile_matter_pct: 77.9,
                fixed_carbon_pct: 20.3,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("ds_fraction", self.ds_fraction), ("scg_fraction", self.scg_fraction)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if (self.ds_fraction + self.scg_fraction - 1.0).abs() > FRACTION_TOL {
            return Err(Error::Domain(format!(
                "ds_fraction + scg_fraction = {} (must be 1)",
                self.ds_fraction + self.scg_fraction
            )));
        }
        let fibres = [self.cellulose_pct, self.hemicellulose_pct, self.lignin_pct];
        if fibres.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("fibre percentages must be non-negative".into()));
        }
        let total: f64 = fibres.iter().sum();
        if total > 100.0 + FRACTION_TOL {
            return Err(Error::Domain(format!("fibre percentages sum to {total} > 100")));
        }
        Ok(())
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.ds_fraction
            .total_cmp(&other.ds_fraction)
            .then(self.cellulose_pct.total_cmp(&other.cellulose_pct))
            .then(self.hemicellulose_pct.total_cmp(&other.hemicellulose_pct))
            .then(self.lignin_pct.total_cmp(&other.lignin_pct))
            .then(self.sample_id.cmp(&other.sample_id))
    }
}

/// Mixes two samples, `frac_a` of `pure_a` by mass.
///
/// Every numeric field is the mass-weighted mean of the parents. The operands
/// are put in a canonical order and the fraction is snapped to a 2⁻⁴⁰ grid
/// (where `1 − f` is exact) before mixing, so that `blend_spec(a, b, f)` and
/// `blend_spec(b, a, 1 − f)` run the exact same floating-point operations.
pub fn blend_spec(pure_a: &SampleSpec, pure_b: &SampleSpec, frac_a: f64) -> Result<SampleSpec> {
    if !(0.0..=1.0).contains(&frac_a) || frac_a.is_nan() {
        return Err(Error::Domain(format!("blend fraction {frac_a} is outside [0, 1]")));
    }
    match pure_a.canonical_cmp(pure_b) {
        Ordering::Equal => Ok(pure_a.clone()),
        Ordering::Greater => mix(pure_b, pure_a, 1.0 - frac_a),
        Ordering::Less => mix(pure_a, pure_b, frac_a),
    }
}

const FRACTION_GRID: f64 = (1u64 << 40) as f64;

fn mix(a: &SampleSpec, b: &SampleSpec, fa: f64) -> Result<SampleSpec> {
    let fa = (fa * FRACTION_GRID).round_ties_even() / FRACTION_GRID;
    let fb = 1.0 - fa;
    let w = |x: f64, y: f64| fa * x + fb * y;
    if fa == 1.0 {
        return Ok(a.clone());
    }
    if fb == 1.0 {
        return Ok(b.clone());
    }
    let proximate = match (a.proximate, b.proximate) {
        (Some(pa), Some(pb)) => Some(Proximate {
            ash_pct: w(pa.ash_pct, pb.ash_pct),
            volatile_matter_pct: w(pa.volatile_matter_pct, pb.volatile_matter_pct),
            fixed_carbon_pct: w(pa.fixed_carbon_pct, pb.fixed_carbon_pct),
        }),
        _ => None,
    };
    let ds_fraction = w(a.ds_fraction, b.ds_fraction);
    let spec = SampleSpec {
        sample_id: format!("{}% {} + {}% {}", trim_pct(fa), a.sample_id, trim_pct(fb), b.sample_id),
        ds_fraction,
        scg_fraction: w(a.scg_fraction, b.scg_fraction),
        cellulose_pct: w(a.cellulose_pct, b.cellulose_pct),
        hemicellulose_pct: w(a.hemicellulose_pct, b.hemicellulose_pct),
        lignin_pct: w(a.lignin_pct, b.lignin_pct),
        proximate,
    };
    spec.validate()?;
    Ok(spec)
}

fn trim_pct(f: f64) -> String {
    let s = format!("{:.4}", f * 100.0);
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// One TGA sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TgaPoint {
    pub time_s: f64,
    pub temperature_k: f64,
    /// Mass relative to the first recorded mass.
    pub mass_fraction: f64,
}

/// One thermogravimetric run at a constant heating rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TgaCurve {
    pub spec: SampleSpec,
    /// Heating rate in K/min (numerically equal to °C/min).
    pub heating_rate: f64,
    pub points: Vec<TgaPoint>,
}

impl TgaCurve {
    /// Builds a curve and checks its structural invariants.
    pub fn new(spec: SampleSpec, heating_rate: f64, points: Vec<TgaPoint>) -> Result<Self> {
        let curve = TgaCurve { spec, heating_rate, points };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.heating_rate > 0.0) || !self.heating_rate.is_finite() {
            return Err(Error::Domain(format!("heating rate {} must be > 0", self.heating_rate)));
        }
        if self.points.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (i, p) in self.points.iter().enumerate() {
            if !(p.mass_fraction > 0.0 && p.mass_fraction <= 1.0) {
                return Err(Error::Structure {
                    row: i as u64,
                    message: format!("mass fraction {} outside (0, 1]", p.mass_fraction),
                });
            }
            if i > 0 {
                let prev = &self.points[i - 1];
                if !(p.time_s > prev.time_s) {
                    return Err(Error::Structure {
                        row: i as u64,
                        message: "time is not strictly increasing".into(),
                    });
                }
                if p.temperature_k < prev.temperature_k {
                    return Err(Error::Structure {
                        row: i as u64,
                        message: "temperature decreases".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Stable identifier of the run: `sample_id@beta`.
    pub fn curve_id(&self) -> String {
        format!("{}@{}", self.spec.sample_id, fmt_num(self.heating_rate))
    }

    pub fn temperatures(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.temperature_k).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mass_fraction).collect()
    }

    pub fn temperature_span(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.temperature_k - a.temperature_k,
            _ => 0.0,
        }
    }

    /// Grid step if the temperatures form an arithmetic progression
    /// (relative tolerance 1e-6 of the step).
    pub fn uniform_step(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let n = self.points.len() - 1;
        let step = self.temperature_span() / n as f64;
        if !(step > 0.0) {
            return None;
        }
        let t0 = self.points[0].temperature_k;
        let ok = self
            .points
            .iter()
            .enumerate()
            .all(|(i, p)| (p.temperature_k - (t0 + step * i as f64)).abs() <= 1e-6 * step);
        ok.then_some(step)
    }

    /// Mass interpolated linearly at temperature `t_k`, clamped to the ends.
    pub fn mass_at_temperature(&self, t_k: f64) -> f64 {
        let pts = &self.points;
        if t_k <= pts[0].temperature_k {
            return pts[0].mass_fraction;
        }
        let last = pts[pts.len() - 1];
        if t_k >= last.temperature_k {
            return last.mass_fraction;
        }
        let j = pts.partition_point(|p| p.temperature_k <= t_k);
        let (a, b) = (pts[j - 1], pts[j]);
        let w = (t_k - a.temperature_k) / (b.temperature_k - a.temperature_k);
        a.mass_fraction + w * (b.mass_fraction - a.mass_fraction)
    }
}

/// JSON sidecar describing a curve file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSidecar {
    pub sample_id: String,
    pub ds_fraction: f64,
    pub scg_fraction: f64,
    pub heating_rate_c_per_min: f64,
    pub cellulose_pct: f64,
    pub hemicellulose_pct: f64,
    pub lignin_pct: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ash_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vm_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fc_pct: Option<f64>,
}

impl CurveSidecar {
    pub fn from_curve(curve: &TgaCurve) -> Self {
        let s = &curve.spec;
        CurveSidecar {
            sample_id: s.sample_id.clone(),
            ds_fraction: s.ds_fraction,
            scg_fraction: s.scg_fraction,
            heating_rate_c_per_min: curve.heating_rate,
            cellulose_pct: s.cellulose_pct,
            hemicellulose_pct: s.hemicellulose_pct,
            lignin_pct: s.lignin_pct,
            ash_pct: s.proximate.map(|p| p.ash_pct),
            vm_pct: s.proximate.map(|p| p.volatile_matter_pct),
            fc_pct: s.proximate.map(|p| p.fixed_carbon_pct),
        }
    }

    pub fn spec(&self) -> Result<SampleSpec> {
        let proximate = match (self.ash_pct, self.vm_pct, self.fc_pct) {
            (Some(ash_pct), Some(volatile_matter_pct), Some(fixed_carbon_pct)) => Some(Proximate {
                ash_pct,
                volatile_matter_pct,
                fixed_carbon_pct,
            }),
            _ => None,
        };
        let spec = SampleSpec {
            sample_id: self.sample_id.clone(),
            ds_fraction: self.ds_fraction,
            scg_fraction: self.scg_fraction,
            cellulose_pct: self.cellulose_pct,
            hemicellulose_pct: self.hemicellulose_pct,
            lignin_pct: self.lignin_pct,
            proximate,
        };
        spec.validate()?;
        Ok(spec)
    }
}

enum Layout {
    TimeTemperatureMass,
    TemperatureMass,
}

/// Parses a TGA CSV document.
///
/// Mass is normalized to the first row; readings above the first mass
/// (buoyancy drift at the start of a run) are clamped to 1. Temperatures are
/// read in °C. For the two-column layout time is reconstructed from `beta`.
pub fn load_curve(data: &str, meta: SampleSpec, beta: f64) -> Result<TgaCurve> {
    load_curve_reader(data.as_bytes(), meta, beta)
}

pub fn load_curve_reader<R: Read>(reader: R, meta: SampleSpec, beta: f64) -> Result<TgaCurve> {
    meta.validate()?;
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("heating rate {beta} must be > 0")));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(Error::Parse { line: 1, message: e.to_string() }),
    };
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::EmptyInput);
    }
    let names: Vec<&str> = headers.iter().collect();
    let layout = match names.as_slice() {
        ["time_s", "temperature_c", "mass_pct"] => Layout::TimeTemperatureMass,
        ["temperature_c", "mass_pct"] => Layout::TemperatureMass,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "unexpected header {:?}; expected time_s,temperature_c,mass_pct or temperature_c,mass_pct",
                    names
                ),
            })
        }
    };

    // (line, time, temperature_k, mass_pct)
    let mut rows: Vec<(u64, Option<f64>, f64, f64)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| -> Result<f64> {
            let raw = record.get(i).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing column {}", i + 1),
            })?;
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("cannot parse {raw:?} as a number"),
                })
        };
        let row = match layout {
            Layout::TimeTemperatureMass => {
                (line, Some(field(0)?), celsius_to_kelvin(field(1)?), field(2)?)
            }
            Layout::TemperatureMass => (line, None, celsius_to_kelvin(field(0)?), field(1)?),
        };
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    if rows.len() < MIN_ROWS {
        return Err(Error::Input(format!(
            "curve has {} rows, at least {MIN_ROWS} required",
            rows.len()
        )));
    }

    let m_first = rows[0].3;
    if !(m_first > 0.0) {
        return Err(Error::Structure { row: rows[0].0, message: "initial mass must be positive".into() });
    }
    let t_first = rows[0].2;
    let mut points = Vec::with_capacity(rows.len());
    for (i, &(line, time, temperature_k, mass_pct)) in rows.iter().enumerate() {
        let time_s = time.unwrap_or((temperature_k - t_first) * 60.0 / beta);
        if mass_pct <= 0.0 {
            return Err(Error::Structure { row: line, message: format!("non-positive mass {mass_pct}") });
        }
        if i > 0 {
            let prev: &TgaPoint = &points[i - 1];
            if temperature_k < prev.temperature_k {
                return Err(Error::Structure { row: line, message: "temperature decreases".into() });
            }
            if !(time_s > prev.time_s) {
                return Err(Error::Structure {
                    row: line,
                    message: "time is not strictly increasing".into(),
                });
            }
        }
        points.push(TgaPoint {
            time_s,
            temperature_k,
            mass_fraction: (mass_pct / m_first).min(1.0),
        });
    }
    TgaCurve::new(meta, beta, points)
}

/// Serializes a curve in the three-column CSV layout.
pub fn curve_to_csv(curve: &TgaCurve) -> String {
    let mut out = String::from("time_s,temperature_c,mass_pct\n");
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{}",
            p.time_s,
            kelvin_to_celsius(p.temperature_k),
            p.mass_fraction * 100.0
        );
    }
    out
}

/// Path of the JSON sidecar belonging to a curve CSV.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Reads a curve CSV together with its sidecar.
pub fn read_curve_file(csv_path: &Path) -> Result<TgaCurve> {
    let side_path = sidecar_path(csv_path);
    let side_text = std::fs::read_to_string(&side_path).map_err(|e| {
        Error::Input(format!("cannot read sidecar {}: {e}", side_path.display()))
    })?;
    let sidecar: CurveSidecar = serde_json::from_str(&side_text)?;
    let spec = sidecar.spec()?;
    let file = std::fs::File::open(csv_path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", csv_path.display())))?;
    load_curve_reader(file, spec, sidecar.heating_rate_c_per_min)
}

/// Writes a curve CSV and its sidecar next to it.
pub fn write_curve_file(curve: &TgaCurve, csv_path: &Path) -> Result<()> {
    std::fs::write(csv_path, curve_to_csv(curve))?;
    let side = serde_json::to_string_pretty(&CurveSidecar::from_curve(curve))?;
    std::fs::write(sidecar_path(csv_path), side + "\n")?;
    Ok(())
}

/// Resamples onto an arithmetic temperature grid with linear interpolation.
///
/// The grid spans the original first and last temperature exactly, so the
/// realised step is `span / round(span / dt)`, which equals `dt` whenever
/// the span is a multiple of it. Runs of equal temperature (isothermal
/// segments) collapse onto their last reading.
pub fn resample_uniform(curve: &TgaCurve, dt: f64) -> Result<TgaCurve> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("resampling step {dt} must be > 0")));
    }
    let span = curve.temperature_span();
    if span < 10.0 * dt {
        return Err(Error::Resolution(format!(
            "step {dt} K too coarse for a {span} K temperature span (need span >= 10 steps)"
        )));
    }
    let mut src: Vec<TgaPoint> = Vec::with_capacity(curve.points.len());
    for p in &curve.points {
        match src.last_mut() {
            Some(last) if last.temperature_k == p.temperature_k => *last = *p,
            _ => src.push(*p),
        }
    }
    let n = (span / dt).round() as usize;
    let t0 = src[0].temperature_k;
    let t_end = src[src.len() - 1].temperature_k;
    let step = span / n as f64;
    let mut points = Vec::with_capacity(n + 1);
    let mut j = 1;
    for k in 0..=n {
        let t = if k == n { t_end } else { t0 + step * k as f64 };
        while j < src.len() - 1 && src[j].temperature_k < t {
            j += 1;
        }
        let (a, b) = (src[j - 1], src[j]);
        let w = ((t - a.temperature_k) / (b.temperature_k - a.temperature_k)).clamp(0.0, 1.0);
        points.push(TgaPoint {
            time_s: a.time_s + w * (b.time_s - a.time_s),
            temperature_k: t,
            mass_fraction: a.mass_fraction + w * (b.mass_fraction - a.mass_fraction),
        });
    }
    TgaCurve::new(curve.spec.clone(), curve.heating_rate, points)
}

pub(crate) fn fmt_num(v: f64) -> String {
    format!("{v}")
}
