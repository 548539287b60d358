use serde::{Deserialize, Serialize};

use super::{check_unit_delta, Branch, EntropyBoundReport, SmoothnessClassSpec, CONSTANTS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultivariateSubclass {
    HolderSub,
    PolySub,
}

/// Number of distinct k-th order partial derivatives in `d` variables,
/// `binom(d+k-1, d-1)`.
pub fn dstar(d: u64, k: u64) -> Result<u64> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension d must be at least 1".into()));
    }
    let overflow = || Error::Overflow { d, k };
    let n = d.checked_add(k).and_then(|v| v.checked_sub(1)).ok_or_else(overflow)?;
    let r = (d - 1).min(k);
    let mut acc: u128 = 1;
    for i in 1..=r {
        // acc * (n - r + i) is divisible by i at every step
        acc = acc
            .checked_mul(u128::from(n - r + i))
            .ok_or_else(overflow)?
            / u128::from(i);
        if acc > u128::from(u64::MAX) {
            return Err(overflow());
        }
    }
    Ok(acc as u64)
}

/// `Σ_{k=0}^{γ} D*_k`.
pub fn dstar_sum(d: u64, gamma: u64) -> Result<u64> {
    (0..=gamma).try_fold(0u64, |acc, k| {
        acc.checked_add(dstar(d, k)?)
            .ok_or(Error::Overflow { d, k })
    })
}

/// Entropy bounds for the d-variate Hölder or polynomial subclass.
///
/// No lower bound is known for the polynomial subclass, so its
/// `lower_log` is `None`.
pub fn multivariate_entropy(
    spec: &SmoothnessClassSpec,
    d: u64,
    delta: f64,
    sub: MultivariateSubclass,
) -> Result<EntropyBoundReport> {
    check_unit_delta(delta)?;
    let gamma = spec.gamma();
    let radii = spec.radii();
    let df = d as f64;
    match sub {
        MultivariateSubclass::HolderSub => {
            let mut fact = 1.0;
            let mut r_star: f64 = 1.0;
            for k in 1..=gamma + 1 {
                if k > 1 {
                    fact *= (k - 1) as f64;
                }
                let count = dstar(d, (k - 1) as u64)? as f64;
                r_star = r_star.max(count * radii[k] / fact);
            }
            let p = df / (gamma as f64 + 1.0);
            let bound = CONSTANTS.power_prefactor * df.powf(df) * (r_star / delta).powf(p);
            Ok(EntropyBoundReport {
                delta,
                lower_log: Some(bound),
                upper_log: Some(bound),
                branch: Branch::MultiHolderSub,
                constants: CONSTANTS,
            })
        }
        MultivariateSubclass::PolySub => {
            let scale = 4.0 * (gamma as f64 + 1.0);
            let mut counts = Vec::with_capacity(gamma + 1);
            let mut terms = Vec::with_capacity(gamma + 1);
            for (k, half_width) in spec.coefficient_bounds().into_iter().enumerate() {
                let count = dstar(d, k as u64)? as f64;
                counts.push(count);
                terms.push((scale * count * half_width / delta).ln());
            }
            let min = terms.iter().copied().fold(f64::INFINITY, f64::min);
            let (upper, branch) = if min >= 0.0 {
                (
                    counts.iter().zip(&terms).map(|(c, t)| c * t).sum(),
                    Branch::MultiPolyGrid,
                )
            } else {
                let total: f64 = counts.iter().sum();
                let log_r: f64 = counts.iter().zip(radii).map(|(c, r)| c * r.ln()).sum();
                (total * (1.0 / delta).ln() + log_r, Branch::MultiPolyCounting)
            };
            Ok(EntropyBoundReport {
                delta,
                lower_log: None,
                upper_log: Some(upper),
                branch,
                constants: CONSTANTS,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{holder_sub_entropy, poly_cover_upper, ClassKind, RadiusProfile};
    use approx::assert_abs_diff_eq;

    #[test]
    fn dstar_examples() {
        for k in 0..30 {
            assert_eq!(dstar(1, k).unwrap(), 1);
        }
        assert_eq!(dstar(3, 2).unwrap(), 6);
        assert_eq!(dstar_sum(2, 8).unwrap(), 45);
        assert!(dstar_sum(2, 8).unwrap() >= 2u64.pow(3));
        assert!(dstar(0, 1).is_err());
    }

    #[test]
    fn dstar_pascal() {
        for d in 2..=6 {
            for k in 1..=12 {
                assert_eq!(
                    dstar(d, k).unwrap(),
                    dstar(d - 1, k).unwrap() + dstar(d, k - 1).unwrap()
                );
            }
        }
    }

    #[test]
    fn dstar_overflow_names_pair() {
        match dstar(200, 200) {
            Err(Error::Overflow { d, k }) => assert_eq!((d, k), (200, 200)),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn sum_lower_bound_for_large_gamma() {
        for d in [2u64, 3] {
            for gamma in (2 * d * d)..(2 * d * d + 10) {
                assert!(dstar_sum(d, gamma).unwrap() >= d.pow(d as u32 + 1));
            }
        }
    }

    #[test]
    fn univariate_collapse() {
        for gamma in 0..5 {
            for profile in [RadiusProfile::Constant(1.0), RadiusProfile::Factorial(1.5)] {
                let h = SmoothnessClassSpec::from_profile(ClassKind::HolderSub, gamma, &profile).unwrap();
                let p = SmoothnessClassSpec::from_profile(ClassKind::PolySub, gamma, &profile).unwrap();
                for delta in [0.5, 0.1, 0.01] {
                    let m = multivariate_entropy(&h, 1, delta, MultivariateSubclass::HolderSub).unwrap();
                    let u = holder_sub_entropy(&h, delta).unwrap();
                    assert_abs_diff_eq!(m.upper_log.unwrap(), u.upper_log.unwrap(), epsilon = 1e-12);
                    let m = multivariate_entropy(&p, 1, delta, MultivariateSubclass::PolySub).unwrap();
                    assert_abs_diff_eq!(
                        m.upper_log.unwrap(),
                        poly_cover_upper(&p, delta).unwrap().0,
                        epsilon = 1e-12
                    );
                    assert!(m.lower_log.is_none());
                }
            }
        }
    }

    #[test]
    fn bivariate_holder_power() {
        let s = SmoothnessClassSpec::new(ClassKind::HolderSub, 0, vec![1.0, 1.0]).unwrap();
        let r = multivariate_entropy(&s, 2, 0.01, MultivariateSubclass::HolderSub).unwrap();
        assert_abs_diff_eq!(r.upper_log.unwrap(), 4e4, epsilon = 1e-6);
    }

    #[test]
    fn poly_upper_non_increasing() {
        let s = SmoothnessClassSpec::from_profile(ClassKind::PolySub, 3, &RadiusProfile::Constant(1.0))
            .unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..40 {
            let delta = 0.999 * 0.8f64.powi(40 - i);
            let v = multivariate_entropy(&s, 3, delta, MultivariateSubclass::PolySub)
                .unwrap()
                .upper_log
                .unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }
}
