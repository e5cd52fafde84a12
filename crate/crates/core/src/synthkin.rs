//! Synthetic TGA generator: independent parallel nth-order Arrhenius
//! reactions plus an inert residue.
//!
//! Each pseudo-component follows
//!
//! ```text
//! dα_i/dT = (A_i/β)·exp(−Ea_i/(R·T))·(1 − α_i)^n_i
//! m(T)    = residue + Σ c_i·(1 − α_i(T))
//! ```
//!
//! integrated with fixed-step classical RK4 on the temperature grid. Because
//! components never interact, a blend of two models is the union of their
//! (re-weighted) components and its mass curve is exactly the convex
//! combination of the parents' curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{celsius_to_kelvin, per_minute_to_per_second, GAS_CONSTANT};
use crate::error::{Error, Result};
use crate::tga::{blend_spec, SampleSpec, TgaCurve, TgaPoint};

/// Heating rates of the reference experimental grid, K/min.
pub const FIXTURE_BETAS: [f64; 4] = [5.0, 10.0, 15.0, 20.0];

/// Integration step of the fixture suite, K.
pub const FIXTURE_STEP: f64 = 0.5;

const OVERSHOOT_TOL: f64 = 1e-6;
const BALANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoComponent {
    #[serde(default)]
    pub name: String,
    /// Mass fraction of the initial sample carried by this component.
    pub fraction: f64,
    /// J/mol
    pub ea: f64,
    /// 1/s
    pub a: f64,
    pub order: f64,
}

impl PseudoComponent {
    /// First-order component whose DTG peak sits at `peak_k` when heated at
    /// `beta_ref` K/min (A solved from the Kissinger peak condition).
    pub fn with_peak(name: &str, fraction: f64, ea: f64, peak_k: f64, beta_ref: f64) -> Self {
        let beta = per_minute_to_per_second(beta_ref);
        let ln_a = (ea * beta / (GAS_CONSTANT * peak_k * peak_k)).ln() + ea / (GAS_CONSTANT * peak_k);
        PseudoComponent { name: name.into(), fraction, ea, a: ln_a.exp(), order: 1.0 }
    }

    fn validate(&self, idx: usize) -> Result<()> {
        let ok = self.fraction > 0.0
            && self.fraction <= 1.0
            && self.ea > 0.0
            && self.a >= 0.0
            && self.order > 0.0
            && self.ea.is_finite()
            && self.a.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("pseudo-component {idx} has invalid parameters: {self:?}")))
        }
    }

    /// Rate constant in temperature units, 1/K.
    fn rate_per_kelvin(&self, t_k: f64, beta_k_per_s: f64) -> f64 {
        if self.a == 0.0 {
            return 0.0;
        }
        (self.a.ln() - beta_k_per_s.ln() - self.ea / (GAS_CONSTANT * t_k)).exp()
    }

    fn dalpha_dt(&self, t_k: f64, alpha: f64, beta_k_per_s: f64) -> f64 {
        let remaining = (1.0 - alpha).max(0.0);
        if remaining == 0.0 {
            return 0.0;
        }
        self.rate_per_kelvin(t_k, beta_k_per_s) * remaining.powf(self.order)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoComponentModel {
    /// Sample description attached to generated curves.
    pub sample: SampleSpec,
    pub components: Vec<PseudoComponent>,
    /// Inert char + ash fraction.
    pub residue: f64,
    pub t_start_k: f64,
    pub t_end_k: f64,
}

impl PseudoComponentModel {
    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.components.iter().enumerate() {
            c.validate(i)?;
        }
        if !(0.0..1.0).contains(&self.residue) {
            return Err(Error::Domain(format!("residue {} outside [0, 1)", self.residue)));
        }
        let total: f64 = self.residue + self.components.iter().map(|c| c.fraction).sum::<f64>();
        if (total - 1.0).abs() > BALANCE_TOL {
            return Err(Error::Domain(format!("residue + component fractions = {total}, must be 1")));
        }
        if !(self.t_start_k > 0.0 && self.t_start_k < self.t_end_k) {
            return Err(Error::Domain(format!(
                "temperature range [{}, {}] K is invalid",
                self.t_start_k, self.t_end_k
            )));
        }
        Ok(())
    }

    /// Mass-weighted union of two models: `frac_a` of `a` and the rest of `b`.
    pub fn blend(a: &Self, b: &Self, frac_a: f64, sample: SampleSpec) -> Result<Self> {
        if !(0.0..=1.0).contains(&frac_a) {
            return Err(Error::Domain(format!("blend fraction {frac_a} is outside [0, 1]")));
        }
        let frac_b = 1.0 - frac_a;
        let scaled = |m: &Self, f: f64| -> Vec<PseudoComponent> {
            if f <= 0.0 {
                return Vec::new();
            }
            m.components.iter().map(|c| PseudoComponent { fraction: c.fraction * f, ..c.clone() }).collect()
        };
        let mut components = scaled(a, frac_a);
        components.extend(scaled(b, frac_b));
        let model = PseudoComponentModel {
            sample,
            components,
            residue: frac_a * a.residue + frac_b * b.residue,
            t_start_k: a.t_start_k.max(b.t_start_k),
            t_end_k: a.t_end_k.min(b.t_end_k),
        };
        model.validate()?;
        Ok(model)
    }
}

/// Full integration output: per-component conversions and total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub heating_rate: f64,
    pub temperature_k: Vec<f64>,
    /// `component_alpha[i][k]`: conversion of component i at grid point k.
    pub component_alpha: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
}

impl Trajectory {
    pub fn into_curve(self, sample: SampleSpec) -> Result<TgaCurve> {
        let t0 = self.temperature_k[0];
        let beta = self.heating_rate;
        let points = self
            .temperature_k
            .iter()
            .zip(&self.mass)
            .map(|(&t, &m)| TgaPoint {
                time_s: (t - t0) * 60.0 / beta,
                temperature_k: t,
                // component fractions are balanced only to 1e-9
                mass_fraction: m.min(1.0),
            })
            .collect();
        TgaCurve::new(sample, beta, points)
    }
}

/// Integrates the model at `beta` K/min with temperature step `dt` K.
pub fn simulate_trajectory(model: &PseudoComponentModel, beta: f64, dt: f64) -> Result<Trajectory> {
    model.validate()?;
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("heating rate {beta} must be > 0")));
    }
    if !(dt > 0.0 && dt <= 1.0) {
        return Err(Error::Domain(format!("integration step {dt} K must be in (0, 1]")));
    }
    let span = model.t_end_k - model.t_start_k;
    let n = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let temps: Vec<f64> = (0..=n)
        .map(|k| if k == n { model.t_end_k } else { model.t_start_k + dt * k as f64 })
        .collect();
    let beta_s = per_minute_to_per_second(beta);

    let mut component_alpha = Vec::with_capacity(model.components.len());
    for (idx, comp) in model.components.iter().enumerate() {
        let mut alpha = Vec::with_capacity(temps.len());
        let mut a = 0.0_f64;
        alpha.push(a);
        for w in temps.windows(2) {
            let (t, h) = (w[0], w[1] - w[0]);
            let k1 = comp.dalpha_dt(t, a, beta_s);
            let k2 = comp.dalpha_dt(t + 0.5 * h, a + 0.5 * h * k1, beta_s);
            let k3 = comp.dalpha_dt(t + 0.5 * h, a + 0.5 * h * k2, beta_s);
            let k4 = comp.dalpha_dt(t + h, a + h * k3, beta_s);
            let next = a + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !next.is_finite() || next > 1.0 + OVERSHOOT_TOL {
                return Err(Error::Stability { component: idx, temperature_k: w[1] });
            }
            a = next.clamp(0.0, 1.0);
            alpha.push(a);
        }
        component_alpha.push(alpha);
    }

    let mass = (0..temps.len())
        .map(|k| {
            model.residue
                + model
                    .components
                    .iter()
                    .zip(&component_alpha)
                    .map(|(c, al)| c.fraction * (1.0 - al[k]))
                    .sum::<f64>()
        })
        .collect();
    Ok(Trajectory { heating_rate: beta, temperature_k: temps, component_alpha, mass })
}

/// Simulated TGA curve of the model at `beta` K/min.
pub fn simulate(model: &PseudoComponentModel, beta: f64, dt: f64) -> Result<TgaCurve> {
    simulate_trajectory(model, beta, dt)?.into_curve(model.sample.clone())
}

/// DTG peak temperature of a first-order reaction: the root of
/// `Ea·β/(R·T²) = A·exp(−Ea/(R·T))` in (200 K, 2000 K), β in K/s.
///
/// Solved by bisection on the log form down to the resolution of `f64`.
pub fn kissinger_peak(ea: f64, a: f64, beta: f64) -> Result<f64> {
    if !(ea > 0.0 && a > 0.0 && beta > 0.0) {
        return Err(Error::Domain("Ea, A and beta must be > 0".into()));
    }
    let residual = |t: f64| {
        (ea * beta / (GAS_CONSTANT * t * t)).ln() - a.ln() + ea / (GAS_CONSTANT * t)
    };
    let (mut lo, mut hi) = (200.0_f64, 2000.0_f64);
    let (f_lo, f_hi) = (residual(lo), residual(hi));
    // residual is strictly decreasing in T
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Bracket(format!(
            "Ea = {ea} J/mol, A = {a} 1/s, beta = {beta} K/s has no peak in (200, 2000) K"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One synthetic sample with its curves on the fixture heating-rate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub model: PseudoComponentModel,
    pub curves: Vec<TgaCurve>,
}

const FIXTURE_T_START_C: f64 = 30.0;
const FIXTURE_T_END_C: f64 = 900.0;

fn fixture_range() -> (f64, f64) {
    (celsius_to_kelvin(FIXTURE_T_START_C), celsius_to_kelvin(FIXTURE_T_END_C))
}

/// First-order single-step reaction, Ea = 180 kJ/mol, A = 1e13 1/s, no residue.
pub fn single_step_model() -> PseudoComponentModel {
    let (t_start_k, t_end_k) = fixture_range();
    PseudoComponentModel {
        sample: SampleSpec::new("single-step", 1.0, 0.0, 0.0, 0.0).expect("valid spec"),
        components: vec![PseudoComponent {
            name: "single".into(),
            fraction: 1.0,
            ea: 180_000.0,
            a: 1e13,
            order: 1.0,
        }],
        residue: 0.0,
        t_start_k,
        t_end_k,
    }
}

/// Same model with the inert residue set to `residue` and the reacting
/// fractions rescaled to keep the total at 1.
pub fn with_residue(mut model: PseudoComponentModel, residue: f64) -> PseudoComponentModel {
    let scale = (1.0 - residue) / (1.0 - model.residue);
    for c in &mut model.components {
        c.fraction *= scale;
    }
    model.residue = residue;
    model
}

/// Kinetic signature of a three-component feedstock: (Ea J/mol, DTG peak °C
/// at 10 K/min) for hemicellulose, cellulose and lignin.
struct FeedstockKinetics {
    hemicellulose: (f64, f64),
    cellulose: (f64, f64),
    lignin: (f64, f64),
}

const DS_KINETICS: FeedstockKinetics = FeedstockKinetics {
    hemicellulose: (120_000.0, 290.0),
    cellulose: (200_000.0, 355.0),
    lignin: (50_000.0, 400.0),
};

const SCG_KINETICS: FeedstockKinetics = FeedstockKinetics {
    hemicellulose: (125_000.0, 295.0),
    cellulose: (210_000.0, 350.0),
    lignin: (55_000.0, 420.0),
};

/// Three pseudo-components sized by the sample's fibre analysis. The
/// volatile share `1 − residue` is split in proportion to cellulose,
/// hemicellulose and lignin. `jitter` perturbs Ea by up to ±3 % and peak
/// positions by up to ±5 K.
fn three_component_model(
    sample: SampleSpec,
    kin: &FeedstockKinetics,
    residue: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> PseudoComponentModel {
    let (t_start_k, t_end_k) = fixture_range();
    let fibre_total = sample.cellulose_pct + sample.hemicellulose_pct + sample.lignin_pct;
    let volatile = 1.0 - residue;
    let parts = [
        ("hemicellulose", sample.hemicellulose_pct, kin.hemicellulose),
        ("cellulose", sample.cellulose_pct, kin.cellulose),
        ("lignin", sample.lignin_pct, kin.lignin),
    ];
    let mut offsets = [(0.0, 0.0); 3];
    if let Some(rng) = rng {
        for o in offsets.iter_mut() {
            *o = (rng.gen_range(-0.03..0.03), rng.gen_range(-5.0..5.0));
        }
    }
    let mut components: Vec<PseudoComponent> = parts
        .iter()
        .zip(offsets)
        .map(|(&(name, pct, (ea, peak_c)), (dea, dpeak))| {
            PseudoComponent::with_peak(
                name,
                volatile * pct / fibre_total,
                ea * (1.0 + dea),
                celsius_to_kelvin(peak_c + dpeak),
                10.0,
            )
        })
        .collect();
    // absorb the rounding of the proportional split into the largest part
    let sum: f64 = components.iter().map(|c| c.fraction).sum();
    components[0].fraction += volatile - sum;
    PseudoComponentModel { sample, components, residue, t_start_k, t_end_k }
}

/// DS-like three-component model without jitter.
pub fn three_component_model_ds() -> PseudoComponentModel {
    three_component_model(SampleSpec::date_seeds(), &DS_KINETICS, 0.2774, None)
}

/// Deterministic verification suite:
///
/// 1. `single-step`: the first-order reaction of [`single_step_model`]
///    over a 25 % inert residue, so that the mass never reaches zero;
/// 2. `DS`, `SCG`: three-component feedstocks with seeded kinetic jitter;
/// 3. `Blend1`..`Blend3`: 75/50/25 % DS unions of the two feedstocks.
///
/// Every model is simulated at 5, 10, 15 and 20 K/min on a 0.5 K grid.
pub fn make_fixture_suite(seed: u64) -> Result<Vec<Fixture>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ds = three_component_model(SampleSpec::date_seeds(), &DS_KINETICS, 0.2774, Some(&mut rng));
    let scg = three_component_model(SampleSpec::spent_coffee_grounds(), &SCG_KINETICS, 0.2784, Some(&mut rng));

    let mut models = vec![
        ("single-step".to_string(), with_residue(single_step_model(), 0.25)),
        ("DS".to_string(), ds.clone()),
        ("SCG".to_string(), scg.clone()),
    ];
    for (i, frac) in [0.75, 0.5, 0.25].into_iter().enumerate() {
        let name = format!("Blend{}", i + 1);
        let mut spec = blend_spec(&ds.sample, &scg.sample, frac)?;
        spec.sample_id = name.clone();
        models.push((name, PseudoComponentModel::blend(&ds, &scg, frac, spec)?));
    }

    models
        .into_iter()
        .map(|(name, model)| {
            let curves = simulate_grid(&model, &FIXTURE_BETAS, FIXTURE_STEP)?;
            Ok(Fixture { name, model, curves })
        })
        .collect()
}

/// Simulates one model at several heating rates in parallel.
pub fn simulate_grid(model: &PseudoComponentModel, betas: &[f64], dt: f64) -> Result<Vec<TgaCurve>> {
    betas.par_iter().map(|&b| simulate(model, b, dt)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_keeps_full_mass() {
        let mut m = single_step_model();
        m.components[0].a = 0.0;
        let tr = simulate_trajectory(&m, 10.0, 1.0).unwrap();
        assert!(tr.mass.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_component_runs_to_completion() {
        let tr = simulate_trajectory(&single_step_model(), 10.0, 0.5).unwrap();
        assert!(tr.mass.last().unwrap().abs() < 1e-6);
        assert_eq!(tr.mass[0], 1.0);
        assert!(tr.mass.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = single_step_model();
        assert!(simulate_trajectory(&m, 10.0, 2.0).is_err());
        assert!(simulate_trajectory(&m, 0.0, 0.5).is_err());
        let mut bad = m.clone();
        bad.residue = 0.2;
        assert!(matches!(bad.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn coarse_step_on_stiff_component_is_reported() {
        let mut m = single_step_model();
        // below first order the rate stays finite as α → 1, so a coarse
        // step runs past completion
        m.components[0].order = 0.5;
        let r = simulate_trajectory(&m, 5.0, 1.0);
        assert!(matches!(r, Err(Error::Stability { .. })), "{r:?}");
    }

    #[test]
    fn kissinger_root_properties() {
        let beta = 10.0 / 60.0;
        let t = kissinger_peak(150_000.0, 1e13, beta).unwrap();
        assert!((t - 523.6).abs() < 0.5, "{t}");
        let lhs = 150_000.0 * beta / (GAS_CONSTANT * t * t);
        let rhs = 1e13 * (-150_000.0 / (GAS_CONSTANT * t)).exp();
        assert!(((lhs - rhs) / lhs).abs() < 1e-9);
        let t2 = kissinger_peak(150_000.0, 1e13, 2.0 * beta).unwrap();
        assert!(t2 > t);
        assert!(matches!(kissinger_peak(150_000.0, 1e40, beta), Err(Error::Bracket(_))));
    }

    #[test]
    fn with_peak_places_kissinger_root() {
        let c = PseudoComponent::with_peak("x", 0.5, 120_000.0, 560.0, 10.0);
        let t = kissinger_peak(c.ea, c.a, 10.0 / 60.0).unwrap();
        assert!((t - 560.0).abs() < 1e-6);
    }

    #[test]
    fn blend_union_conserves_mass_balance() {
        let suite = make_fixture_suite(3).unwrap();
        let ds = &suite[1].model;
        let scg = &suite[2].model;
        let b = PseudoComponentModel::blend(ds, scg, 0.5, ds.sample.clone()).unwrap();
        assert_eq!(b.components.len(), 6);
        assert!(b.validate().is_ok());
    }
}
