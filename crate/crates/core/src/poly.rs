//! Dense univariate polynomials in the monomial basis.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    /// `coeffs[k]` multiplies `x^k`.
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn nth_derivative(&self, order: usize) -> Self {
        (0..order).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn antiderivative(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        Self::new(out)
    }

    /// Exact `∫_a^b p(x) dx`.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..len)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(0.0)
                        - other.coeffs.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| a * c).collect())
    }

    /// `(c0 + c1 x)^p`.
    pub fn linear_power(c0: f64, c1: f64, p: usize) -> Self {
        (0..p).fold(Self::new(vec![1.0]), |acc, _| {
            acc.mul(&Self::new(vec![c0, c1]))
        })
    }

    /// Taylor data `f^(k)(0)`, k = 0..len.
    pub fn derivatives_at_zero(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if k > 0 {
                    fact *= k as f64;
                }
                c * fact
            })
            .collect()
    }

    /// Builds a polynomial from Taylor data `f^(k)(0)`.
    pub fn from_derivatives_at_zero(taylor: &[f64]) -> Self {
        let mut inv_fact = 1.0;
        Self::new(
            taylor
                .iter()
                .enumerate()
                .map(|(k, &d)| {
                    if k > 0 {
                        inv_fact /= k as f64;
                    }
                    d * inv_fact
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_integrate() {
        let p = Polynomial::new(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 9.0);
        // ∫_0^1 1 - 2x + 3x² = 1 - 1 + 1
        assert!((p.integrate(0.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn taylor_round_trip() {
        let p = Polynomial::new(vec![0.5, 1.0, -0.25, 2.0]);
        let t = p.derivatives_at_zero();
        assert_eq!(t, vec![0.5, 1.0, -0.5, 12.0]);
        assert_eq!(Polynomial::from_derivatives_at_zero(&t), p);
    }

    #[test]
    fn bump_factor_power() {
        // (1 - x)^2 = 1 - 2x + x²
        let p = Polynomial::linear_power(1.0, -1.0, 2);
        assert_eq!(p.coeffs(), &[1.0, -2.0, 1.0]);
    }
}
