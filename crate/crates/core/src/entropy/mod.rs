//! Smoothness classes and their metric entropy.
//!
//! Every bound here is a rate statement with unspecified universal
//! constants; the evaluators fix those constants (see [`BoundConstants`])
//! and echo them in each [`EntropyBoundReport`] so that numbers computed
//! on different machines or at different times compare exactly.

mod bounds;
mod constructive;
mod legendre;
mod multivariate;

pub use bounds::{
    b2_feasibility, ellipsoid_entropy, full_holder_entropy, holder_sub_entropy, poly_cover_upper,
    poly_pack_lower_b1, poly_sub_entropy, B2Feasibility,
};
pub use constructive::{
    build_packing_set, build_product_cover, PackingSet, ProductCover, DEFAULT_COVER_CAP,
    MAX_PACKING_MEMBERS,
};
pub use legendre::{legendre_coeffs, legendre_eval, legendre_l2_distance, pochhammer};
pub use multivariate::{dstar, dstar_sum, multivariate_entropy, MultivariateSubclass};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The constants standing in for the "≍ 1" factors of the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// `C` inside the Legendre-based packing lower bound.
    pub b1_scale: f64,
    /// `C'` in the `C'(γ+1)` packing lower bound.
    pub b2_per_dim: f64,
    /// Prefactor on every `δ^{-1/(γ+1)}`-type power bound.
    pub power_prefactor: f64,
}

pub const CONSTANTS: BoundConstants = BoundConstants {
    b1_scale: 1.0,
    b2_per_dim: std::f64::consts::LN_2,
    power_prefactor: 1.0,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassKind {
    HolderFull,
    PolySub,
    HolderSub,
    Sobolev,
    Ellipsoid,
}

impl ClassKind {
    pub fn default_domain(self) -> Interval {
        match self {
            ClassKind::HolderFull | ClassKind::PolySub | ClassKind::HolderSub => {
                Interval::new(-1.0, 1.0).expect("static interval")
            }
            ClassKind::Sobolev | ClassKind::Ellipsoid => {
                Interval::new(0.0, 1.0).expect("static interval")
            }
        }
    }
}

impl fmt::Display for ClassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassKind::HolderFull => "holder-full",
            ClassKind::PolySub => "poly-sub",
            ClassKind::HolderSub => "holder-sub",
            ClassKind::Sobolev => "sobolev",
            ClassKind::Ellipsoid => "ellipsoid",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lower: f64,
    upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidInput(format!(
                "interval needs finite lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// How the derivative bounds `R_0..R_{γ+1}` depend on the order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RadiusProfile {
    /// `R_k = C` for every k.
    Constant(f64),
    /// `R_0 = C`, `R_k = C (k-1)!` for k ≥ 1.
    FactorialMinusOne(f64),
    /// `R_k = C k!`.
    Factorial(f64),
    Explicit(Vec<f64>),
}

/// Expands a profile into the `γ+2` radii `R_0..R_{γ+1}`.
pub fn make_radii(profile: &RadiusProfile, gamma: usize) -> Result<Vec<f64>> {
    let len = gamma + 2;
    let radii = match profile {
        RadiusProfile::Constant(c) => vec![*c; len],
        RadiusProfile::FactorialMinusOne(c) => {
            let mut out = Vec::with_capacity(len);
            out.push(*c);
            let mut fact = 1.0;
            for k in 1..len {
                if k > 1 {
                    fact *= (k - 1) as f64;
                }
                out.push(c * fact);
            }
            out
        }
        RadiusProfile::Factorial(c) => {
            let mut fact = 1.0;
            (0..len)
                .map(|k| {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    c * fact
                })
                .collect()
        }
        RadiusProfile::Explicit(v) => {
            if v.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    got: v.len(),
                });
            }
            v.clone()
        }
    };
    validate_radii(&radii)?;
    Ok(radii)
}

fn validate_radii(radii: &[f64]) -> Result<()> {
    match radii.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
        Some(k) => Err(Error::InvalidInput(format!(
            "radius R_{k} = {} must be positive and finite",
            radii[k]
        ))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessClassSpec {
    gamma: usize,
    radii: Vec<f64>,
    domain: Interval,
    kind: ClassKind,
    /// `c` in `μ_m = (c m)^{-2(γ+1)}`; ellipsoid classes only.
    eigen_decay: Option<f64>,
}

impl SmoothnessClassSpec {
    pub fn new(kind: ClassKind, gamma: usize, radii: Vec<f64>) -> Result<Self> {
        Self::with_domain(kind, gamma, radii, kind.default_domain())
    }

    pub fn from_profile(kind: ClassKind, gamma: usize, profile: &RadiusProfile) -> Result<Self> {
        Self::new(kind, gamma, make_radii(profile, gamma)?)
    }

    pub fn with_domain(
        kind: ClassKind,
        gamma: usize,
        radii: Vec<f64>,
        domain: Interval,
    ) -> Result<Self> {
        if radii.len() != gamma + 2 {
            return Err(Error::DimensionMismatch {
                expected: gamma + 2,
                got: radii.len(),
            });
        }
        validate_radii(&radii)?;
        let eigen_decay = (kind == ClassKind::Ellipsoid).then_some(1.0);
        Ok(Self {
            gamma,
            radii,
            domain,
            kind,
            eigen_decay,
        })
    }

    pub fn with_eigen_decay(mut self, c: f64) -> Result<Self> {
        if self.kind != ClassKind::Ellipsoid {
            return Err(Error::InvalidInput(
                "eigen decay only applies to ellipsoid classes".into(),
            ));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidInput(format!("eigen decay c = {c} must be > 0")));
        }
        self.eigen_decay = Some(c);
        Ok(self)
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn kind(&self) -> ClassKind {
        self.kind
    }

    pub fn eigen_decay(&self) -> Option<f64> {
        self.eigen_decay
    }

    /// `μ_m = (c m)^{-2(γ+1)}`, m ≥ 1.
    pub fn ellipsoid_eigenvalue(&self, m: usize) -> Option<f64> {
        let c = self.eigen_decay?;
        Some((c * m as f64).powf(-2.0 * (self.gamma as f64 + 1.0)))
    }

    /// `R* = (max_{k=1..γ+1} R_k/(k-1)!) ∨ 1`.
    pub fn r_star(&self) -> f64 {
        let mut fact = 1.0;
        let mut best: f64 = 1.0;
        for k in 1..=self.gamma + 1 {
            if k > 1 {
                fact *= (k - 1) as f64;
            }
            best = best.max(self.radii[k] / fact);
        }
        best
    }

    /// Half-widths `R_k/k!` of the coefficient polyhedron, k = 0..γ.
    pub fn coefficient_bounds(&self) -> Vec<f64> {
        let mut fact = 1.0;
        (0..=self.gamma)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                self.radii[k] / fact
            })
            .collect()
    }

    pub(crate) fn require_kind(&self, expected: &[ClassKind]) -> Result<()> {
        if expected.contains(&self.kind) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "operation needs a {} class, got {}",
                expected
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(" or "),
                self.kind
            )))
        }
    }
}

/// Which formula branch produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Polynomial subclass, grid-cover upper bound (small δ).
    CoverGrid,
    /// Polynomial subclass, counting upper bound (large δ).
    CoverCounting,
    HolderSubLargeR0,
    HolderSubSmallR0,
    EllipsoidLargeRadius,
    EllipsoidSmallRadius,
    FullHolderGrid,
    FullHolderCounting,
    MultiHolderSub,
    MultiPolyGrid,
    MultiPolyCounting,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::CoverGrid => "poly-cover-grid",
            Branch::CoverCounting => "poly-cover-counting",
            Branch::HolderSubLargeR0 => "holder-sub-r0-ge-1",
            Branch::HolderSubSmallR0 => "holder-sub-r0-lt-1",
            Branch::EllipsoidLargeRadius => "ellipsoid-r-ge-gamma+1",
            Branch::EllipsoidSmallRadius => "ellipsoid-r-lt-gamma+1",
            Branch::FullHolderGrid => "holder-full-grid",
            Branch::FullHolderCounting => "holder-full-counting",
            Branch::MultiHolderSub => "multi-holder-sub",
            Branch::MultiPolyGrid => "multi-poly-grid",
            Branch::MultiPolyCounting => "multi-poly-counting",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyBoundReport {
    pub delta: f64,
    /// Lower bound on the log packing number; `None` where no bound is known.
    pub lower_log: Option<f64>,
    pub upper_log: Option<f64>,
    pub branch: Branch,
    pub constants: BoundConstants,
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("delta = {delta} must be positive")))
    }
}

pub(crate) fn check_unit_delta(delta: f64) -> Result<()> {
    check_delta(delta)?;
    if delta >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "delta = {delta} outside the admissible range (0, 1)"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile() {
        assert_eq!(make_radii(&RadiusProfile::Constant(1.0), 2).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn factorial_profile() {
        assert_eq!(
            make_radii(&RadiusProfile::Factorial(1.0), 3).unwrap(),
            vec![1.0, 1.0, 2.0, 6.0, 24.0]
        );
    }

    #[test]
    fn factorial_minus_one_profile() {
        // R_0 = 2, R_1 = 2·0!, R_2 = 2·1!, R_3 = 2·2!
        assert_eq!(
            make_radii(&RadiusProfile::FactorialMinusOne(2.0), 2).unwrap(),
            vec![2.0, 2.0, 2.0, 4.0]
        );
    }

    #[test]
    fn rejects_non_positive_radii() {
        assert!(make_radii(&RadiusProfile::Constant(0.0), 1).is_err());
        assert!(make_radii(&RadiusProfile::Explicit(vec![1.0, -1.0, 1.0]), 1).is_err());
        assert!(make_radii(&RadiusProfile::Explicit(vec![1.0, 1.0]), 1).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(SmoothnessClassSpec::new(ClassKind::PolySub, 1, vec![1.0, 1.0]).is_err());
        assert!(Interval::new(1.0, 1.0).is_err());
        let e = SmoothnessClassSpec::new(ClassKind::Ellipsoid, 0, vec![1.0, 1.0]).unwrap();
        assert_eq!(e.eigen_decay(), Some(1.0));
        assert!(e.clone().with_eigen_decay(0.0).is_err());
        assert_eq!(e.domain(), Interval::new(0.0, 1.0).unwrap());
        let p = SmoothnessClassSpec::new(ClassKind::PolySub, 0, vec![1.0, 1.0]).unwrap();
        assert!(p.with_eigen_decay(1.0).is_err());
    }

    #[test]
    fn r_star_examples() {
        let s = SmoothnessClassSpec::from_profile(ClassKind::HolderSub, 1, &RadiusProfile::Factorial(1.0))
            .unwrap();
        assert_eq!(s.r_star(), 2.0);
        let s = SmoothnessClassSpec::from_profile(
            ClassKind::HolderSub,
            4,
            &RadiusProfile::FactorialMinusOne(1.0),
        )
        .unwrap();
        assert_eq!(s.r_star(), 1.0);
    }
}
