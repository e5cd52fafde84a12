use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinary least squares fit of `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// 1 − SS_res/SS_tot; 1 when both sums vanish.
    pub r_squared: f64,
}

/// OLS on at least three points. Sums are taken about the means to keep the
/// `1/T` abscissae (all ~1e-3 and nearly equal) well conditioned.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::Input(format!("x has {} points, y has {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Input(format!("need at least 3 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite regression input".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let scale = x.iter().map(|v| v.abs()).fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);
    if sxx <= (1e-12 * scale).powi(2) * n {
        return Err(Error::Rank("abscissae have zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (slope * a + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        // roundoff on exact lines can nudge this a hair past 1 or below 0
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(LinearFit { slope, intercept, r_squared })
}
