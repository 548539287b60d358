//! Legendre-basis representation of the polynomial subclass on [-1, 1].

use crate::error::{Error, Result};
use crate::quadrature::legendre_values;

/// Rising factorial `(a)_j = a (a+1) ... (a+j-1)`.
pub fn pochhammer(a: f64, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (a + i as f64))
}

/// Legendre coefficients of the degree-γ polynomial with Taylor data
/// `taylor[k] = f^(k)(0)`.
///
/// `θ̃_k = (k + ½) Σ_{m=0}^{⌊γ/2⌋} f^(k+2m)(0) / (2^{k+2m} m! (½)_{k+m+1})`,
/// with derivatives past γ taken as zero.
pub fn legendre_coeffs(taylor: &[f64]) -> Vec<f64> {
    let len = taylor.len();
    if len == 0 {
        return Vec::new();
    }
    let gamma = len - 1;
    (0..len)
        .map(|k| {
            let mut sum = 0.0;
            let mut m_fact = 1.0;
            for m in 0..=gamma / 2 {
                if m > 0 {
                    m_fact *= m as f64;
                }
                let j = k + 2 * m;
                if j > gamma {
                    break;
                }
                let denom = 2f64.powi(j as i32) * m_fact * pochhammer(0.5, k + m + 1);
                sum += taylor[j] / denom;
            }
            (k as f64 + 0.5) * sum
        })
        .collect()
}

/// `Σ θ̃_k P_k(x)`.
pub fn legendre_eval(theta: &[f64], x: f64) -> f64 {
    if theta.is_empty() {
        return 0.0;
    }
    legendre_values(theta.len() - 1, x)
        .iter()
        .zip(theta)
        .map(|(p, t)| p * t)
        .sum()
}

/// Unweighted L²[-1, 1] distance between two Legendre expansions.
pub fn legendre_l2_distance(theta: &[f64], theta_prime: &[f64]) -> Result<f64> {
    if theta.len() != theta_prime.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            got: theta_prime.len(),
        });
    }
    let sq: f64 = theta
        .iter()
        .zip(theta_prime)
        .enumerate()
        .map(|(k, (a, b))| 2.0 / (2.0 * k as f64 + 1.0) * (a - b) * (a - b))
        .sum();
    Ok(sq.sqrt())
}
