use serde::{Deserialize, Serialize};

use super::{
    check_delta, check_unit_delta, Branch, ClassKind, EntropyBoundReport, SmoothnessClassSpec,
    CONSTANTS,
};
use crate::error::{Error, Result};

fn report(delta: f64, lower: Option<f64>, upper: Option<f64>, branch: Branch) -> EntropyBoundReport {
    EntropyBoundReport {
        delta,
        lower_log: lower,
        upper_log: upper,
        branch,
        constants: CONSTANTS,
    }
}

/// `log(4(γ+1) R_k / (k! δ))` for k = 0..γ.
fn grid_terms(spec: &SmoothnessClassSpec, delta: f64) -> Vec<f64> {
    let scale = 4.0 * (spec.gamma() as f64 + 1.0);
    spec.coefficient_bounds()
        .iter()
        .map(|b| (scale * b / delta).ln())
        .collect()
}

/// Upper bound on the log covering number of the polynomial subclass.
///
/// Uses the per-coordinate grid count while every coordinate needs at
/// least one grid cell, and the counting bound once some `R_k/k!` drops
/// below the resolution.
pub fn poly_cover_upper(spec: &SmoothnessClassSpec, delta: f64) -> Result<(f64, Branch)> {
    check_delta(delta)?;
    let terms = grid_terms(spec, delta);
    let min = terms.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        Ok((terms.iter().sum(), Branch::CoverGrid))
    } else {
        let gamma = spec.gamma() as f64;
        let log_r: f64 = spec.radii()[..=spec.gamma()].iter().map(|r| r.ln()).sum();
        Ok(((gamma / 2.0 + 1.0) * (1.0 / delta).ln() + log_r, Branch::CoverCounting))
    }
}

/// Legendre-based lower bound on the log packing number of the
/// polynomial subclass, with the scale constant `C = 1`.
pub fn poly_pack_lower_b1(spec: &SmoothnessClassSpec, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    spec.require_kind(&[ClassKind::PolySub, ClassKind::HolderFull])?;
    let gamma = spec.gamma();
    let g = gamma as f64;
    // 9^{-γ} γ^{-γ}, with 0^0 = 1
    let log_shrink = if gamma == 0 { 0.0 } else { -g * 9f64.ln() - g * g.ln() };
    let radii = spec.radii();
    let mut total = (g + 1.0) * log_shrink;
    for k in 0..=gamma {
        let inner: f64 = (0..=gamma / 2)
            .map(|m| k + 2 * m)
            .filter(|&j| j <= gamma)
            .map(|j| radii[j])
            .sum();
        if inner <= 0.0 {
            return Err(Error::Degenerate(format!(
                "radius sum for Legendre coordinate {k} is zero"
            )));
        }
        total += (CONSTANTS.b1_scale * inner / delta).ln();
    }
    Ok(total)
}

/// Feasibility of the grid-times-hypercube packing construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct B2Feasibility {
    pub feasible: bool,
    /// Grid size along the dominant coordinate.
    pub m0: u64,
    /// `C'(γ+1)` when feasible, otherwise `None`.
    pub log_lower: Option<f64>,
    pub k_tilde: usize,
    /// `(k̃+1) ∨ Σ R_k/k!`.
    pub scale: f64,
}

/// Checks whether the packing construction along the dominant polynomial
/// coordinate `k̃ = argmax R_k/k!` yields at least `2^{γ+1}` members.
pub fn b2_feasibility(spec: &SmoothnessClassSpec, delta: f64) -> Result<B2Feasibility> {
    check_delta(delta)?;
    let bounds = spec.coefficient_bounds();
    // smallest index on ties
    let (k_tilde, top) = bounds
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, b)| if b > best.1 { (k, b) } else { best });
    let scale = ((k_tilde + 1) as f64).max(bounds.iter().sum());
    let cells = (2.0 * top / (3.0 * delta * scale)).ceil();
    let m0 = if cells >= (u64::MAX - 1) as f64 { u64::MAX } else { cells as u64 + 1 };
    let gamma = spec.gamma();
    let enough = gamma + 1 >= 64 || m0 >= 1u64 << (gamma + 1);
    let fits = 3.0 * delta * scale <= 2.0 * top;
    let feasible = enough && fits;
    Ok(B2Feasibility {
        feasible,
        m0,
        log_lower: feasible.then_some(CONSTANTS.b2_per_dim * (gamma as f64 + 1.0)),
        k_tilde,
        scale,
    })
}

/// Lower and upper log-entropy bounds for the polynomial subclass.
pub fn poly_sub_entropy(spec: &SmoothnessClassSpec, delta: f64) -> Result<EntropyBoundReport> {
    spec.require_kind(&[ClassKind::PolySub])?;
    let (upper, branch) = poly_cover_upper(spec, delta)?;
    let b1 = poly_pack_lower_b1(spec, delta)?;
    let b2 = b2_feasibility(spec, delta)?.log_lower;
    let lower = b2.map_or(b1, |b| b.max(b1));
    Ok(report(delta, Some(lower), Some(upper), branch))
}

/// Hölder subclass (all derivatives vanish at the origin).
pub fn holder_sub_entropy(spec: &SmoothnessClassSpec, delta: f64) -> Result<EntropyBoundReport> {
    check_unit_delta(delta)?;
    spec.require_kind(&[ClassKind::HolderSub, ClassKind::HolderFull])?;
    let (lower, upper, branch) = holder_sub_bounds(spec, delta);
    Ok(report(delta, Some(lower), Some(upper), branch))
}

fn holder_sub_bounds(spec: &SmoothnessClassSpec, delta: f64) -> (f64, f64, Branch) {
    let p = 1.0 / (spec.gamma() as f64 + 1.0);
    let r_star = spec.r_star();
    let r0 = spec.radii()[0];
    let upper = CONSTANTS.power_prefactor * (r_star / delta).powf(p);
    if r0 >= 1.0 {
        (upper, upper, Branch::HolderSubLargeR0)
    } else {
        let lower = CONSTANTS.power_prefactor * (r_star * r0 / delta).powf(p);
        (lower, upper, Branch::HolderSubSmallR0)
    }
}

/// Ellipsoid class with eigenvalue decay `μ_m = (cm)^{-2(γ+1)}`.
pub fn ellipsoid_entropy(spec: &SmoothnessClassSpec, delta: f64) -> Result<EntropyBoundReport> {
    check_delta(delta)?;
    spec.require_kind(&[ClassKind::Ellipsoid, ClassKind::Sobolev])?;
    let g1 = spec.gamma() as f64 + 1.0;
    let radius = spec.radii()[spec.gamma() + 1];
    let both = CONSTANTS.power_prefactor * (radius / delta).powf(1.0 / g1);
    if radius >= g1 {
        Ok(report(delta, Some(both), Some(both), Branch::EllipsoidLargeRadius))
    } else {
        let upper = CONSTANTS.power_prefactor * delta.powf(-1.0 / g1);
        Ok(report(delta, Some(both), Some(upper), Branch::EllipsoidSmallRadius))
    }
}

/// Full Hölder class, via its split into the polynomial and Hölder
/// subclasses.
pub fn full_holder_entropy(spec: &SmoothnessClassSpec, delta: f64) -> Result<EntropyBoundReport> {
    check_unit_delta(delta)?;
    spec.require_kind(&[ClassKind::HolderFull])?;
    let (cover, cover_branch) = poly_cover_upper(spec, delta)?;
    let (sub_lower, sub_upper, _) = holder_sub_bounds(spec, delta);
    let b1 = poly_pack_lower_b1(spec, delta)?;
    let mut lower = b1.max(sub_lower);
    if let Some(b2) = b2_feasibility(spec, delta)?.log_lower {
        lower = lower.max(b2);
    }
    let branch = match cover_branch {
        Branch::CoverGrid => Branch::FullHolderGrid,
        _ => Branch::FullHolderCounting,
    };
    Ok(report(delta, Some(lower), Some(cover + sub_upper), branch))
}
