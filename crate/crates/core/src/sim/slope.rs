use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope; 0 for an exact fit.
    pub slope_stderr: f64,
    pub points: usize,
}

/// Least squares of `log mise` on `log n`.
pub fn slope_fit(ns: &[f64], mises: &[f64]) -> Result<SlopeFit> {
    if ns.len() != mises.len() {
        return Err(Error::DimensionMismatch {
            expected: ns.len(),
            got: mises.len(),
        });
    }
    if ns.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "slope fit needs at least 3 points, got {}",
            ns.len()
        )));
    }
    if let Some(v) = ns.iter().chain(mises).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(format!("slope fit needs positive values, got {v}")));
    }
    let x: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = mises.iter().map(|v| v.ln()).collect();
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all sample sizes are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_stderr = (sse / (m - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
        points: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_power_laws() {
        let ns = [100.0, 200.0, 400.0, 800.0];
        let inv: Vec<f64> = ns.iter().map(|n| 3.0 / n).collect();
        let fit = slope_fit(&ns, &inv).unwrap();
        assert_abs_diff_eq!(fit.slope, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
        let two_thirds: Vec<f64> = ns.iter().map(|n: &f64| 0.7 * n.powf(-2.0 / 3.0)).collect();
        assert_abs_diff_eq!(slope_fit(&ns, &two_thirds).unwrap().slope, -2.0 / 3.0, epsilon = 1e-12);
        let scaled: Vec<f64> = two_thirds.iter().map(|v| 50.0 * v).collect();
        assert_abs_diff_eq!(
            slope_fit(&ns, &scaled).unwrap().slope,
            slope_fit(&ns, &two_thirds).unwrap().slope,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(slope_fit(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(slope_fit(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).is_err());
        assert!(slope_fit(&[2.0, 2.0, 2.0], &[1.0, 3.0, 2.0]).is_err());
    }
}
