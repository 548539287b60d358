//! Regression truths with machine-checked class membership.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Points of the grid used for derivative-bound checks.
pub const CERTIFICATE_GRID: usize = 2048;
/// Relative slack allowed in certificate comparisons.
const CERTIFICATE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// `θ_0 = C̄/6`, `θ_k = C̄/(6γ k!)`: a vertex of the shrunken
    /// coefficient box, hence in both the polynomial subclass and `S_{γ+1}`.
    PolyStar { gamma: usize, c_bar: f64 },
    /// `b x^{γ+1} (1-x)^{γ+1}` with b as large as the derivative bounds
    /// `R_k = radius` allow.
    Bump {
        gamma: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    /// `Σ_{m≤M} θ_m φ_m` in the cosine basis with `Σ θ_m²/μ_m = R²`.
    EllipsoidMember {
        gamma: usize,
        radius: f64,
        terms: usize,
        #[serde(default)]
        sign_seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

impl TestFunction {
    pub fn gamma(&self) -> usize {
        match *self {
            TestFunction::PolyStar { gamma, .. }
            | TestFunction::Bump { gamma, .. }
            | TestFunction::EllipsoidMember { gamma, .. } => gamma,
        }
    }

    /// Radius of the class the function is certified in.
    pub fn radius(&self) -> f64 {
        match *self {
            TestFunction::PolyStar { c_bar, .. } => c_bar,
            TestFunction::Bump { radius, .. } | TestFunction::EllipsoidMember { radius, .. } => radius,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::PolyStar { gamma, c_bar } => format!("poly_star({gamma}, {c_bar})"),
            TestFunction::Bump { gamma, radius } => format!("bump({gamma}, {radius})"),
            TestFunction::EllipsoidMember {
                gamma,
                radius,
                terms,
                sign_seed,
            } => format!("ellipsoid_member({gamma}, {radius}, {terms}, {sign_seed})"),
        }
    }

    pub fn build(&self) -> Result<Truth> {
        let radius = self.radius();
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "test function radius must be positive, got {radius}"
            )));
        }
        let (repr, certificate) = match *self {
            TestFunction::PolyStar { gamma, c_bar } => poly_star(gamma, c_bar),
            TestFunction::Bump { gamma, radius } => bump(gamma, radius),
            TestFunction::EllipsoidMember {
                gamma,
                radius,
                terms,
                sign_seed,
            } => ellipsoid_member(gamma, radius, terms, sign_seed)?,
        };
        if let Some(check) = certificate.checks.iter().find(|c| !c.passed) {
            return Err(Error::Certificate(format!(
                "{}: {} = {} exceeds {}",
                self.label(),
                check.name,
                check.value,
                check.bound
            )));
        }
        Ok(Truth {
            function: self.clone(),
            repr,
            certificate,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl CertificateCheck {
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            passed: value <= bound * (1.0 + CERTIFICATE_SLACK),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub class: String,
    pub basis: String,
    pub checks: Vec<CertificateCheck>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Poly(Polynomial),
    /// Coefficients of `1, √2 cos(πx), √2 cos(2πx), …`.
    Cosine(Vec<f64>),
}

/// A certified regression function on [0, 1].
#[derive(Debug, Clone)]
pub struct Truth {
    function: TestFunction,
    repr: Repr,
    certificate: Certificate,
}

impl Truth {
    pub fn function(&self) -> &TestFunction {
        &self.function
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn gamma(&self) -> usize {
        self.function.gamma()
    }

    pub fn polynomial(&self) -> Option<&Polynomial> {
        match &self.repr {
            Repr::Poly(p) => Some(p),
            Repr::Cosine(_) => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Poly(p) => p.eval(x),
            Repr::Cosine(theta) => {
                let mut sum = theta[0];
                for (m, t) in theta.iter().enumerate().skip(1) {
                    sum += t * std::f64::consts::SQRT_2 * (m as f64 * std::f64::consts::PI * x).cos();
                }
                sum
            }
        }
    }
}

/// `Σ_{k≤γ} f^{(k)}(0)² + ∫_0^1 (f^{(γ+1)})²`, exact for polynomials.
pub fn sobolev_norm_sq(p: &Polynomial, gamma: usize) -> f64 {
    let taylor = p.derivatives_at_zero();
    let head: f64 = taylor.iter().take(gamma + 1).map(|d| d * d).sum();
    let top = p.nth_derivative(gamma + 1);
    head + top.mul(&top).integrate(0.0, 1.0)
}

fn sobolev_check(p: &Polynomial, gamma: usize, radius: f64) -> CertificateCheck {
    CertificateCheck::at_most(
        format!("sobolev_norm_sq(order {})", gamma + 1),
        sobolev_norm_sq(p, gamma),
        radius * radius,
    )
}

fn grid_max_abs(p: &Polynomial) -> f64 {
    let last = (CERTIFICATE_GRID - 1) as f64;
    (0..CERTIFICATE_GRID)
        .map(|i| p.eval(i as f64 / last).abs())
        .fold(0.0, f64::max)
}

fn poly_star(gamma: usize, c_bar: f64) -> (Repr, Certificate) {
    let mut coeffs = vec![c_bar / 6.0];
    let mut fact = 1.0;
    for k in 1..=gamma {
        fact *= k as f64;
        coeffs.push(c_bar / (6.0 * gamma as f64 * fact));
    }
    let mut checks = Vec::new();
    let mut fact = 1.0;
    for (k, &theta) in coeffs.iter().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        let bound = if k == 0 {
            c_bar / 6.0
        } else {
            c_bar / (6.0 * gamma as f64 * fact)
        };
        checks.push(CertificateCheck::at_most(format!("|theta_{k}|"), theta.abs(), bound));
    }
    let p = Polynomial::new(coeffs);
    checks.push(sobolev_check(&p, gamma, c_bar));
    (
        Repr::Poly(p),
        Certificate {
            class: format!("coefficient polyhedron and Sobolev ball, gamma = {gamma}, radius {c_bar}"),
            basis: "monomial".into(),
            checks,
        },
    )
}

fn bump(gamma: usize, radius: f64) -> (Repr, Certificate) {
    let base = Polynomial::linear_power(0.0, 1.0, gamma + 1).mul(&Polynomial::linear_power(1.0, -1.0, gamma + 1));
    let b = (0..=gamma + 1)
        .map(|k| radius / grid_max_abs(&base.nth_derivative(k)))
        .fold(f64::INFINITY, f64::min);
    let p = base.scale(b);
    let mut checks: Vec<CertificateCheck> = (0..=gamma + 1)
        .map(|k| CertificateCheck::at_most(format!("grid max |f^({k})|"), grid_max_abs(&p.nth_derivative(k)), radius))
        .collect();
    checks.push(sobolev_check(&p, gamma, radius));
    (
        Repr::Poly(p),
        Certificate {
            class: format!("derivative bounds R_k = {radius} for k <= {}, Sobolev ball, gamma = {gamma}", gamma + 1),
            basis: "monomial".into(),
            checks,
        },
    )
}

fn ellipsoid_member(gamma: usize, radius: f64, terms: usize, sign_seed: u64) -> Result<(Repr, Certificate)> {
    if terms == 0 {
        return Err(Error::InvalidInput("ellipsoid member needs at least one term".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sign_seed);
    let mu = |m: usize| (m as f64).powi(-2 * (gamma as i32 + 1));
    let theta: Vec<f64> = (1..=terms)
        .map(|m| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * radius * mu(m).sqrt() / (terms as f64).sqrt()
        })
        .collect();
    let norm_sq: f64 = theta.iter().enumerate().map(|(i, t)| t * t / mu(i + 1)).sum();
    let r2 = radius * radius;
    let checks = vec![
        CertificateCheck::at_most("sum theta_m^2/mu_m", norm_sq, r2),
        CertificateCheck::at_most("|sum theta_m^2/mu_m - R^2|", (norm_sq - r2).abs(), 1e-12 * r2),
    ];
    Ok((
        Repr::Cosine(theta),
        Certificate {
            class: format!("ellipsoid, mu_m = m^(-{}), radius {radius}", 2 * (gamma + 1)),
            basis: "phi_1 = 1, phi_m = sqrt(2) cos((m-1) pi x)".into(),
            checks,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn poly_star_constant() {
        let t = TestFunction::PolyStar { gamma: 0, c_bar: 6.0 }.build().unwrap();
        for x in [0.0, 0.4, 1.0] {
            assert_eq!(t.eval(x), 1.0);
        }
    }

    #[test]
    fn poly_star_norm() {
        // (C̄/6)² (1 + 1/γ)
        let t = TestFunction::PolyStar { gamma: 4, c_bar: 3.0 }.build().unwrap();
        let p = t.polynomial().unwrap();
        assert_abs_diff_eq!(sobolev_norm_sq(p, 4), 0.25 * 1.25, epsilon = 1e-14);
        assert!(t.certificate().passed());
    }

    #[test]
    fn bump_zero_scale() {
        let t = TestFunction::Bump { gamma: 0, radius: 1.0 }.build().unwrap();
        // b = 1: the slope bound binds
        assert_abs_diff_eq!(t.eval(0.5), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn bump_vanishes_at_ends() {
        for gamma in 0..6 {
            let t = TestFunction::Bump { gamma, radius: 1.0 }.build().unwrap();
            let p = t.polynomial().unwrap();
            for k in 0..=gamma {
                let d = p.nth_derivative(k);
                assert!(d.eval(0.0).abs() < 1e-12);
                assert!(d.eval(1.0).abs() < 1e-10);
            }
            assert!(t.eval(0.5) > 0.0);
        }
    }

    #[test]
    fn ellipsoid_norm_identity() {
        let t = TestFunction::EllipsoidMember {
            gamma: 1,
            radius: 2.0,
            terms: 12,
            sign_seed: 5,
        }
        .build()
        .unwrap();
        assert_abs_diff_eq!(t.certificate().checks[0].value, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TestFunction::PolyStar { gamma: 1, c_bar: -1.0 }.build().is_err());
        assert!(TestFunction::EllipsoidMember {
            gamma: 1,
            radius: 1.0,
            terms: 0,
            sign_seed: 0
        }
        .build()
        .is_err());
    }

    #[test]
    fn serde_shape() {
        let f: TestFunction = serde_json::from_str(r#"{"kind":"bump","gamma":2}"#).unwrap();
        assert_eq!(f, TestFunction::Bump { gamma: 2, radius: 1.0 });
        assert!(serde_json::from_str::<TestFunction>(r#"{"kind":"bump","gamma":2,"b":1}"#).is_err());
    }
}
