//! Activation thermodynamics from kinetic estimates (Eyring relations).
//!
//! ```text
//! ΔH = Ea − R·Tm
//! ΔG = Ea + R·Tm·ln(kB·Tm / (h·A))
//! ΔS = (ΔH − ΔG) / Tm
//! ```
//!
//! `Tm` is a DTG peak temperature. ΔG is evaluated from `ln A` so that the
//! very large pre-exponential factors of blend fits never overflow.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, GAS_CONSTANT, PLANCK};
use crate::error::{Error, Result};
use crate::kinetics::{AnalysisTable, KineticEstimate, Method};

fn check_tm(t_m: f64) -> Result<()> {
    if t_m > 0.0 && t_m.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("peak temperature {t_m} K must be > 0")))
    }
}

/// Activation enthalpy, J/mol.
pub fn delta_h(ea: f64, t_m: f64) -> Result<f64> {
    check_tm(t_m)?;
    Ok(ea - GAS_CONSTANT * t_m)
}

/// Gibbs free energy of activation, J/mol, with A in 1/s.
pub fn delta_g(ea: f64, t_m: f64, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("pre-exponential factor {a} must be > 0")));
    }
    delta_g_ln(ea, t_m, a.ln())
}

/// [`delta_g`] taking `ln A` directly.
pub fn delta_g_ln(ea: f64, t_m: f64, ln_a: f64) -> Result<f64> {
    check_tm(t_m)?;
    if !ln_a.is_finite() {
        return Err(Error::Domain("ln A must be finite".into()));
    }
    let ln_ratio = (BOLTZMANN * t_m / PLANCK).ln() - ln_a;
    Ok(ea + GAS_CONSTANT * t_m * ln_ratio)
}

/// Entropy of activation, J/(mol·K).
pub fn delta_s(delta_h: f64, delta_g: f64, t_m: f64) -> Result<f64> {
    check_tm(t_m)?;
    Ok((delta_h - delta_g) / t_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoEstimate {
    pub alpha: f64,
    pub method: Method,
    /// J/mol
    pub delta_h: f64,
    /// J/mol
    pub delta_g: f64,
    /// J/(mol·K)
    pub delta_s: f64,
    pub t_m: f64,
}

pub fn thermo_estimate(est: &KineticEstimate, t_m: f64) -> Result<ThermoEstimate> {
    let dh = delta_h(est.ea, t_m)?;
    let dg = delta_g_ln(est.ea, t_m, est.ln_a)?;
    let ds = delta_s(dh, dg, t_m)?;
    Ok(ThermoEstimate { alpha: est.alpha, method: est.method, delta_h: dh, delta_g: dg, delta_s: ds, t_m })
}

/// One thermodynamic estimate per (method, α) of the table, method-major.
pub fn thermo_profile(table: &AnalysisTable, t_m: f64) -> Result<Vec<ThermoEstimate>> {
    if table.rows.is_empty() {
        return Err(Error::Input("kinetic table is empty".into()));
    }
    let mut out = Vec::new();
    for method in table.methods() {
        for est in table.column(method) {
            out.push(thermo_estimate(&est, t_m)?);
        }
    }
    Ok(out)
}

/// Long-format plot data: `alpha,method,quantity,value` with quantities
/// `dH`/`dG` in kJ/mol and `dS` in J/(mol·K).
pub fn profile_to_csv(profile: &[ThermoEstimate]) -> String {
    let mut out = String::from("alpha,method,quantity,value\n");
    for (q, pick) in [
        ("dH", (|e: &ThermoEstimate| e.delta_h / 1000.0) as fn(&ThermoEstimate) -> f64),
        ("dG", |e| e.delta_g / 1000.0),
        ("dS", |e| e.delta_s),
    ] {
        for e in profile {
            let _ = writeln!(out, "{:.4},{},{},{:.6}", e.alpha, e.method, q, pick(e));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enthalpy_by_substitution() {
        let dh = delta_h(200_000.0, 600.0).unwrap();
        assert!((dh - (200_000.0 - 8.314462618 * 600.0)).abs() < 1e-9);
        assert!((dh - 195_011.3).abs() < 0.1);
        assert!((delta_h(0.0, 450.0).unwrap() + GAS_CONSTANT * 450.0).abs() < 1e-12);
        assert!(delta_h(1.0, 0.0).is_err());
    }

    #[test]
    fn gibbs_reference_value() {
        // kB·600/h = 1.25023e13 s⁻¹; ln(1.25023e13/1e15) = −4.38184;
        // 200000 + 4988.68·(−4.38184) = 178140 J/mol
        let dg = delta_g(200_000.0, 600.0, 1e15).unwrap();
        assert!((dg / 1000.0 - 178.14).abs() < 0.01, "{dg}");
    }

    #[test]
    fn gibbs_identity_point_and_decade_shift() {
        let tm = 650.0;
        let a_star = BOLTZMANN * tm / PLANCK;
        let dg = delta_g(180_000.0, tm, a_star).unwrap();
        assert!((dg - 180_000.0).abs() < 1e-6);
        let g1 = delta_g(180_000.0, tm, 1e14).unwrap();
        let g2 = delta_g(180_000.0, tm, 1e13).unwrap();
        assert!((g2 - g1 - GAS_CONSTANT * tm * 10f64.ln()).abs() < 1e-6);
        assert!(matches!(delta_g(1.0, tm, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(delta_s(5.0, 5.0, 600.0).unwrap(), 0.0);
        assert!((delta_s(16_000.0, 10_000.0, 600.0).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn extreme_pre_exponential_stays_finite() {
        for ln_a in [1e-3f64.ln(), 1e60f64.ln()] {
            let e = KineticEstimate {
                method: Method::Kas,
                alpha: 0.5,
                ea: 300_000.0,
                ln_a,
                r_squared: 1.0,
                slope: 0.0,
                intercept: 0.0,
            };
            let t = thermo_estimate(&e, 580.0).unwrap();
            assert!(t.delta_h.is_finite() && t.delta_g.is_finite() && t.delta_s.is_finite());
        }
    }

    #[test]
    fn profile_shape() {
        let e = KineticEstimate { method: Method::Fwo, alpha: 0.1, ea: 1e5, ln_a: 20.0, r_squared: 1.0, slope: 0.0, intercept: 0.0 };
        let table = AnalysisTable::from_estimates("x", &[e]);
        let p = thermo_profile(&table, 550.0).unwrap();
        assert_eq!(p.len(), 1);
        let csv = profile_to_csv(&p);
        assert_eq!(csv.lines().count(), 1 + 3);
        let empty = AnalysisTable::from_estimates("x", &[]);
        assert!(thermo_profile(&empty, 550.0).is_err());
    }
}
