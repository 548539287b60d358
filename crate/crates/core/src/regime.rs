//! The γ* rule, small-n/large-n classification and minimax rate values.
//!
//! All threshold comparisons happen on logarithms: `(γ+1)^{2γ+3}` leaves
//! the double range near γ = 120.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::entropy::{dstar_sum, ClassKind, RadiusProfile, SmoothnessClassSpec};
use crate::error::{Error, Result};

/// Hard stop for the γ* scan; `ln(n/σ²)` never exceeds a few thousand.
const MAX_SCAN: usize = 100_000;

/// Relative gap below which `log(n/σ²)` and a log threshold count as equal,
/// so exact ties such as `n/σ² = 2^5` stay on the small-n side.
pub const TIE_TOL: f64 = 1e-12;

fn above(log_snr: f64, log_threshold: f64) -> bool {
    log_snr - log_threshold > TIE_TOL * log_threshold.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// `(k+1)^{2k+3}`.
    Standard,
    /// `((k+1) log(k∨2))^{2k+3}`, for radii growing like `k!`.
    LogWeighted,
}

impl Threshold {
    /// Logarithm of the threshold at index k.
    pub fn log_value(self, k: usize) -> f64 {
        let exponent = (2 * k + 3) as f64;
        let base = (k + 1) as f64;
        match self {
            Threshold::Standard => exponent * base.ln(),
            Threshold::LogWeighted => exponent * (base * (k.max(2) as f64).ln()).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Finite(usize),
    Analytic,
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothness::Finite(g) => write!(f, "{g}"),
            Smoothness::Analytic => f.write_str("analytic"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SmallN,
    LargeN,
    Analytic,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::SmallN => "SmallN",
            Regime::LargeN => "LargeN",
            Regime::Analytic => "Analytic",
        })
    }
}

/// Which family of rate and threshold formulas applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateClass {
    /// Constant radii.
    Standard,
    /// `R_k` between `C̄` and `C̄(k-1)!`: standard threshold.
    ModerateGrowth,
    /// `R_k = C̄ k!`: log-weighted threshold and an extra `log(γ*∨2)`.
    FactorialGrowth,
    Ellipsoid,
    HolderSub,
    Analytic,
}

impl RateClass {
    pub fn from_class(kind: ClassKind, profile: &RadiusProfile) -> Self {
        match (kind, profile) {
            (ClassKind::Ellipsoid, _) => RateClass::Ellipsoid,
            (ClassKind::HolderSub, _) => RateClass::HolderSub,
            (_, RadiusProfile::Factorial(_)) => RateClass::FactorialGrowth,
            (_, RadiusProfile::FactorialMinusOne(_)) => RateClass::ModerateGrowth,
            _ => RateClass::Standard,
        }
    }

    pub fn threshold(self) -> Threshold {
        match self {
            RateClass::FactorialGrowth => Threshold::LogWeighted,
            _ => Threshold::Standard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFormula {
    /// `(σ²/n)^{(2γ+2)/(2γ+3)}`
    LargeN,
    /// `σ²(γ*+1)/n`
    SmallN,
    /// `σ²(γ*+1) log(γ*∨2)/n`
    SmallNLog,
    /// `R^{2/(2γ+3)} (σ²/n)^{(2γ+2)/(2γ+3)}`
    RScaled,
}

impl RateFormula {
    pub fn label(self) -> &'static str {
        match self {
            RateFormula::LargeN => "(sigma^2/n)^((2g+2)/(2g+3))",
            RateFormula::SmallN => "sigma^2 (g*+1)/n",
            RateFormula::SmallNLog => "sigma^2 (g*+1) log(max(g*,2))/n",
            RateFormula::RScaled => "R^(2/(2g+3)) (sigma^2/n)^((2g+2)/(2g+3))",
        }
    }
}

impl fmt::Display for RateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub n: u64,
    pub sigma_sq: f64,
    pub gamma: Smoothness,
    pub gamma_star: Option<usize>,
    pub regime: Regime,
    pub recommended_degree: usize,
    pub predicted_rate: f64,
    pub rate_formula: RateFormula,
    pub rate_class: RateClass,
    /// `log(n/σ²)`.
    pub log_snr: f64,
    /// Log of the phase-transition threshold, absent without a transition.
    pub log_threshold: Option<f64>,
}

fn check_inputs(n: u64, sigma_sq: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sigma^2 must be positive and finite, got {sigma_sq}"
        )));
    }
    Ok((n as f64).ln() - sigma_sq.ln())
}

/// Smallest k ≥ 0 with `log(n/σ²) ≤ log threshold(k)`, capped at `cap`.
pub fn gamma_star(n: u64, sigma_sq: f64, cap: Option<usize>, threshold: Threshold) -> Result<usize> {
    let log_snr = check_inputs(n, sigma_sq)?;
    let limit = cap.unwrap_or(MAX_SCAN);
    let mut k = 0;
    while k < limit && above(log_snr, threshold.log_value(k)) {
        k += 1;
    }
    Ok(k)
}

fn large_n_rate(sigma_sq: f64, n: u64, gamma: usize) -> f64 {
    let g = gamma as f64;
    (sigma_sq / n as f64).powf((2.0 * g + 2.0) / (2.0 * g + 3.0))
}

pub fn classify(
    n: u64,
    sigma_sq: f64,
    gamma: usize,
    kind: ClassKind,
    profile: &RadiusProfile,
) -> Result<RegimeReport> {
    let log_snr = check_inputs(n, sigma_sq)?;
    let rate_class = RateClass::from_class(kind, profile);
    if matches!(rate_class, RateClass::Ellipsoid | RateClass::HolderSub) {
        let spec = SmoothnessClassSpec::from_profile(kind, gamma, profile)?;
        return Ok(RegimeReport {
            n,
            sigma_sq,
            gamma: Smoothness::Finite(gamma),
            gamma_star: None,
            regime: Regime::LargeN,
            recommended_degree: gamma + 1,
            predicted_rate: nonstandard_rate(&spec, n, sigma_sq)?,
            rate_formula: RateFormula::RScaled,
            rate_class,
            log_snr,
            log_threshold: None,
        });
    }
    let threshold = rate_class.threshold();
    let log_threshold = threshold.log_value(gamma);
    let star = gamma_star(n, sigma_sq, Some(gamma), threshold)?;
    let (regime, recommended_degree, predicted_rate, rate_formula) = if !above(log_snr, log_threshold) {
        let base = sigma_sq * (star + 1) as f64 / n as f64;
        if threshold == Threshold::LogWeighted {
            let rate = base * (star.max(2) as f64).ln();
            (Regime::SmallN, star + 1, rate, RateFormula::SmallNLog)
        } else {
            (Regime::SmallN, star + 1, base, RateFormula::SmallN)
        }
    } else {
        (Regime::LargeN, gamma + 1, large_n_rate(sigma_sq, n, gamma), RateFormula::LargeN)
    };
    Ok(RegimeReport {
        n,
        sigma_sq,
        gamma: Smoothness::Finite(gamma),
        gamma_star: Some(star),
        regime,
        recommended_degree,
        predicted_rate,
        rate_formula,
        rate_class,
        log_snr,
        log_threshold: Some(log_threshold),
    })
}

/// Infinitely smooth classes: no transition, rate `σ²(γ*+1)/n`.
pub fn classify_analytic(n: u64, sigma_sq: f64) -> Result<RegimeReport> {
    let log_snr = check_inputs(n, sigma_sq)?;
    let star = gamma_star(n, sigma_sq, None, Threshold::Standard)?;
    Ok(RegimeReport {
        n,
        sigma_sq,
        gamma: Smoothness::Analytic,
        gamma_star: Some(star),
        regime: Regime::Analytic,
        recommended_degree: star + 1,
        predicted_rate: sigma_sq * (star + 1) as f64 / n as f64,
        rate_formula: RateFormula::SmallN,
        rate_class: RateClass::Analytic,
        log_snr,
        log_threshold: None,
    })
}

/// `max(⌊log n / (2 log log n)⌋, 1)`, with 1 for n ≤ 15.
pub fn heuristic_degree(n: u64) -> usize {
    if n <= 15 {
        return 1;
    }
    let ln = (n as f64).ln();
    ((ln / (2.0 * ln.ln())).floor() as usize).max(1)
}

/// Large-n rate of the ellipsoid and Hölder subclasses, which scale with
/// `R_{γ+1}` and `R*` respectively.
pub fn nonstandard_rate(spec: &SmoothnessClassSpec, n: u64, sigma_sq: f64) -> Result<f64> {
    check_inputs(n, sigma_sq)?;
    let gamma = spec.gamma();
    let radius = match spec.kind() {
        ClassKind::Ellipsoid => spec.radii()[gamma + 1],
        ClassKind::HolderSub => spec.r_star(),
        other => {
            return Err(Error::InvalidInput(format!(
                "no non-standard rate for class {other}"
            )))
        }
    };
    let g = gamma as f64;
    Ok(radius.powf(2.0 / (2.0 * g + 3.0)) * large_n_rate(sigma_sq, n, gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultivariateThreshold {
    pub small_n: bool,
    /// `((2γ+2+d)/d) log Σ_{k≤γ} D*_k`.
    pub log_threshold: f64,
}

pub fn multivariate_threshold(n: u64, sigma_sq: f64, gamma: usize, d: u64) -> Result<MultivariateThreshold> {
    let log_snr = check_inputs(n, sigma_sq)?;
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let sum = dstar_sum(d, gamma as u64)? as f64;
    let df = d as f64;
    let log_threshold = (2.0 * gamma as f64 + 2.0 + df) / df * sum.ln();
    Ok(MultivariateThreshold {
        small_n: !above(log_snr, log_threshold),
        log_threshold,
    })
}
