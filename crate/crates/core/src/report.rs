//! Report tables and the char/volatile mass balance.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{AnalysisTable, Method};

/// Volatile matter from char yield, both in %: `VM = 100 − η`.
pub fn vm_from_char(eta_pct: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&eta_pct) {
        return Err(Error::Domain(format!("char yield {eta_pct} % outside [0, 100]")));
    }
    Ok(100.0 - eta_pct)
}

/// A reported (VM, char) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldRow {
    pub sample: String,
    pub vm_pct: f64,
    pub char_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassBalanceCheck {
    pub sample: String,
    pub reported_vm_pct: f64,
    pub char_pct: f64,
    pub expected_vm_pct: f64,
    /// reported VM + char − 100
    pub imbalance: f64,
    pub consistent: bool,
}

/// Reported values carry two decimals; anything beyond half a unit in the
/// last place is a real inconsistency.
pub const MASS_BALANCE_TOL: f64 = 0.005;

pub fn check_mass_balance(rows: &[YieldRow]) -> Result<Vec<MassBalanceCheck>> {
    rows.iter()
        .map(|r| {
            let expected = vm_from_char(r.char_pct)?;
            let imbalance = r.vm_pct + r.char_pct - 100.0;
            Ok(MassBalanceCheck {
                sample: r.sample.clone(),
                reported_vm_pct: r.vm_pct,
                char_pct: r.char_pct,
                expected_vm_pct: expected,
                imbalance,
                consistent: imbalance.abs() < MASS_BALANCE_TOL,
            })
        })
        .collect()
}

pub fn mass_balance_to_text(checks: &[MassBalanceCheck]) -> String {
    let w = checks.iter().map(|c| c.sample.chars().count()).max().unwrap_or(6).max(6);
    let mut out = format!(
        "{:<w$}  {:>8}  {:>8}  {:>8}  {:>9}  status\n",
        "sample", "VM %", "char %", "100-η", "imbalance"
    );
    for c in checks {
        let _ = writeln!(
            out,
            "{:<w$}  {:>8.2}  {:>8.2}  {:>8.2}  {:>9.2}  {}",
            c.sample,
            c.reported_vm_pct,
            c.char_pct,
            c.expected_vm_pct,
            c.imbalance,
            if c.consistent { "ok" } else { "INCONSISTENT" }
        );
    }
    out
}

/// Long-format kinetics CSV: `alpha,method,ea_kj_mol,a_per_s,r_squared`.
pub fn kinetics_to_csv(table: &AnalysisTable) -> String {
    let mut out = String::from("alpha,method,ea_kj_mol,a_per_s,r_squared\n");
    for row in &table.rows {
        for e in &row.estimates {
            let _ = writeln!(
                out,
                "{:.4},{},{:.4},{:.6e},{:.6}",
                e.alpha,
                e.method,
                e.ea_kj_mol(),
                e.a_per_s(),
                e.r_squared
            );
        }
    }
    out
}

/// Wide Ea(α) plot data: `alpha,<method>...` in kJ/mol.
pub fn ea_plot_csv(table: &AnalysisTable) -> String {
    let methods = table.methods();
    let mut out = String::from("alpha");
    for m in &methods {
        let _ = write!(out, ",{m}");
    }
    out.push('\n');
    for row in &table.rows {
        let _ = write!(out, "{:.4}", row.alpha);
        for m in &methods {
            match row.get(*m) {
                Some(e) => {
                    let _ = write!(out, ",{:.4}", e.ea_kj_mol());
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

fn sci(v: f64) -> String {
    if !v.is_finite() {
        return "inf".into();
    }
    format!("{v:.2e}")
}

/// Aligned text table: α | per method Ea, R², A | Average row.
pub fn kinetics_to_text(table: &AnalysisTable) -> String {
    let methods = if table.rows.is_empty() { Method::ALL.to_vec() } else { table.methods() };
    let cell = |a: &str, b: &str, c: &str| format!("{a:>10} {b:>8} {c:>10}");
    let mut out = String::new();
    let _ = writeln!(out, "Kinetic parameters: {}", table.sample_id);
    let mut head1 = format!("{:<7}", "");
    let mut head2 = format!("{:<7}", "alpha");
    for m in &methods {
        let _ = write!(head1, " | {:^30}", format!("{m} model"));
        let _ = write!(head2, " | {}", cell("Ea(kJ/mol)", "R2", "A(1/s)"));
    }
    let rule = "-".repeat(head2.chars().count());
    let _ = writeln!(out, "{head1}\n{head2}\n{rule}");
    for row in &table.rows {
        let _ = write!(out, "{:<7.2}", row.alpha);
        for m in &methods {
            let text = match row.get(*m) {
                Some(e) => cell(&format!("{:.2}", e.ea_kj_mol()), &format!("{:.4}", e.r_squared), &sci(e.a_per_s())),
                None => cell("n/a", "n/a", "n/a"),
            };
            let _ = write!(out, " | {text}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "{rule}");
    let _ = write!(out, "{:<7}", "Average");
    for m in &methods {
        let avg = table
            .average_ea(*m)
            .map(|v| format!("{:.2}", v / 1000.0))
            .unwrap_or_else(|| "n/a".into());
        let _ = write!(out, " | {}", cell(&avg, "-", "-"));
    }
    out.push('\n');
    for ex in &table.excluded {
        let _ = writeln!(out, "excluded alpha {:.2}: {}", ex.alpha, ex.reason);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::KineticEstimate;

    #[test]
    fn vm_cases() {
        assert_eq!(format!("{:.2}", vm_from_char(27.74).unwrap()), "72.26");
        assert_eq!(vm_from_char(0.0).unwrap(), 100.0);
        assert_eq!(format!("{:.2}", vm_from_char(26.39).unwrap()), "73.61");
        assert!(vm_from_char(100.5).is_err());
        assert!(vm_from_char(-1.0).is_err());
    }

    #[test]
    fn flags_unbalanced_row() {
        let rows = vec![
            YieldRow { sample: "ok".into(), vm_pct: 72.26, char_pct: 27.74 },
            YieldRow { sample: "bad".into(), vm_pct: 70.69, char_pct: 29.04 },
        ];
        let checks = check_mass_balance(&rows).unwrap();
        assert!(checks[0].consistent);
        assert!(!checks[1].consistent);
        assert!((checks[1].imbalance + 0.27).abs() < 1e-9);
        assert!(mass_balance_to_text(&checks).contains("INCONSISTENT"));
    }

    #[test]
    fn text_table_has_average_row() {
        let e = |m, alpha, ea| KineticEstimate { method: m, alpha, ea, ln_a: 30.0, r_squared: 0.99, slope: 0.0, intercept: 0.0 };
        let t = AnalysisTable::from_estimates(
            "S",
            &[e(Method::Friedman, 0.1, 100_000.0), e(Method::Friedman, 0.2, 120_000.0)],
        );
        let txt = kinetics_to_text(&t);
        assert!(txt.lines().any(|l| l.starts_with("Average") && l.contains("110.00")));
        assert_eq!(kinetics_to_csv(&t).lines().count(), 3);
        assert_eq!(ea_plot_csv(&t).lines().next().unwrap(), "alpha,Friedman");
    }
}
