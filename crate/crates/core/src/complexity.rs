//! Localized kernel complexity and the critical radius.
//!
//! `C(r) = sqrt((1/n) Σ min(r², μ_i))`, and the critical radius is the
//! positive root of `C(r) = c0 r²`. `C(r)/r` is non-increasing, so
//! `C(r) − c0 r²` changes sign exactly once on `r > 0`.

use crate::error::{Error, Result};

pub const RADIUS_LOWER: f64 = 1e-12;
/// Accept r once `|C(r) − c0 r²| ≤ RESIDUAL_TOL`, which also meets the
/// relative form `RESIDUAL_TOL (1 + c0 r²)`.
pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_ITER: usize = 10_000;

pub fn kernel_complexity(r: f64, eigenvalues: &[f64]) -> Result<f64> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidInput("empty spectrum".into()));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
    }
    Ok(complexity(r, eigenvalues))
}

fn complexity(r: f64, eigenvalues: &[f64]) -> f64 {
    let r2 = r * r;
    let sum: f64 = eigenvalues.iter().map(|&mu| mu.max(0.0).min(r2)).sum();
    (sum / eigenvalues.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalRadius {
    pub radius: f64,
    /// `C(r) − c0 r²` at the returned radius.
    pub residual: f64,
    pub iterations: usize,
}

pub fn critical_radius(eigenvalues: &[f64], c0: f64) -> Result<CriticalRadius> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidInput("empty spectrum".into()));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::InvalidInput(format!("c0 must be positive, got {c0}")));
    }
    if !eigenvalues.iter().any(|&mu| mu > 0.0) {
        return Err(Error::Degenerate("spectrum has no positive eigenvalue".into()));
    }
    let n = eigenvalues.len() as f64;
    let saturation = (eigenvalues.iter().map(|mu| mu.max(0.0)).sum::<f64>() / n).sqrt();
    let g = |r: f64| complexity(r, eigenvalues) - c0 * r * r;
    let accept = |v: f64| v.abs() <= RESIDUAL_TOL;

    let (mut lo, mut hi) = (RADIUS_LOWER, (saturation / c0 + 1.0).max(1.0));
    let (g_lo, g_hi) = (g(lo), g(hi));
    if !(g_lo > 0.0 && g_hi < 0.0) {
        if accept(g_lo) {
            return Ok(CriticalRadius { radius: lo, residual: g_lo, iterations: 0 });
        }
        return Err(Error::Bracket(format!(
            "no sign change on [{lo}, {hi}]: g = {g_lo}, {g_hi}"
        )));
    }
    for iterations in 1..=MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let v = g(mid);
        if accept(v) || mid <= lo || mid >= hi {
            return Ok(CriticalRadius { radius: mid, residual: v, iterations });
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITER,
        n: eigenvalues.len(),
    })
}

/// Critical radius at `c0 = R/(2σ)`.
pub fn critical_radius_sigma(eigenvalues: &[f64], sigma: f64, r_radius: f64) -> Result<CriticalRadius> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    if !(r_radius > 0.0 && r_radius.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "radius must be positive, got {r_radius}"
        )));
    }
    critical_radius(eigenvalues, r_radius / (2.0 * sigma))
}
