//! Kernel ridge regression with Sobolev kernels.
//!
//! `π̂ = (𝕂 + λI)^{-1} Y/√n` and `f̂(x) = (1/√n) Σ π̂_i K(x, x_i)`.
//! Order-0 problems with distinct positive design points use an O(n)
//! tridiagonal solver; everything else goes through a dense Cholesky
//! factorization.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{check_design, kernel_matrix, SobolevKernel};
use crate::regime::{RateClass, Regime, RegimeReport, Smoothness};

pub const LAMBDA_MIN: f64 = 1e-10;
pub const LAMBDA_MAX: f64 = 1e6;
/// Jitter added after a failed factorization, relative to `trace/n`.
pub const JITTER_SCALE: f64 = 1e-10;
/// Accepted fits satisfy `‖(𝕂+λI)π̂ − Y/√n‖_∞ ≤ RESIDUAL_TOL (1 + ‖Y‖_∞)`.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Relative tolerance on `π̂ᵀ𝕂π̂ = C̄²` in `fit_constrained`.
pub const NORM_TOL: f64 = 1e-6;
const FAST_PATH_MIN_N: usize = 64;
const BISECTION_MAX_ITER: usize = 200;
const MAX_REFINEMENTS: usize = 10;
/// Refinement stops once a correction is this small relative to `‖π‖_∞`.
const REFINE_STOP: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Cholesky,
    Tridiagonal,
}

#[derive(Debug, Clone, Serialize)]
pub struct KrrModel {
    pub order_k: usize,
    pub xs: Vec<f64>,
    pub pi_hat: Vec<f64>,
    pub lambda: f64,
    /// `π̂ᵀ𝕂π̂`.
    pub rkhs_norm: f64,
    /// Diagonal shift added after a failed factorization, 0 if none.
    pub jitter: f64,
    pub residual: f64,
    pub solver: Solver,
    #[serde(skip)]
    kernel: SobolevKernel,
    #[serde(skip)]
    index: Option<OrderZeroIndex>,
}

impl KrrModel {
    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn predict(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                value: x,
                lower: 0.0,
                upper: 1.0,
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: f64) -> f64 {
        let scale = 1.0 / (self.n() as f64).sqrt();
        if let Some(index) = &self.index {
            return scale * index.eval(x);
        }
        let sum: f64 = self
            .xs
            .iter()
            .zip(&self.pi_hat)
            .map(|(&xi, &p)| p * self.kernel.eval_unchecked(x, xi))
            .sum();
        scale * sum
    }

    pub fn predict_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.predict(x)).collect()
    }
}

/// Prefix sums giving `Σ π_j (1 + min(x, x_j))` in O(log n).
#[derive(Debug, Clone)]
struct OrderZeroIndex {
    sorted: Vec<f64>,
    /// `Σ_{j<i} s_j π_j`
    prefix_xpi: Vec<f64>,
    /// `Σ_{j≥i} π_j`
    suffix_pi: Vec<f64>,
}

impl OrderZeroIndex {
    fn new(xs: &[f64], pi: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
        let sorted: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
        let n = xs.len();
        let mut prefix_xpi = vec![0.0; n + 1];
        let mut suffix_pi = vec![0.0; n + 1];
        for (i, &j) in order.iter().enumerate() {
            prefix_xpi[i + 1] = prefix_xpi[i] + xs[j] * pi[j];
        }
        for i in (0..n).rev() {
            suffix_pi[i] = suffix_pi[i + 1] + pi[order[i]];
        }
        Self {
            sorted,
            prefix_xpi,
            suffix_pi,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let i = self.sorted.partition_point(|&s| s <= x);
        self.suffix_pi[0] + self.prefix_xpi[i] + x * self.suffix_pi[i]
    }
}

fn validate(xs: &[f64], ys: &[f64], lambda: f64) -> Result<()> {
    check_design(xs)?;
    if ys.len() != xs.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if let Some(y) = ys.iter().find(|y| !y.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite response {y}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    Ok(())
}

fn residual_tolerance(ys: &[f64]) -> f64 {
    RESIDUAL_TOL * (1.0 + ys.iter().fold(0.0f64, |m, y| m.max(y.abs())))
}

fn scaled_rhs(ys: &[f64]) -> Vec<f64> {
    let s = 1.0 / (ys.len() as f64).sqrt();
    ys.iter().map(|y| y * s).collect()
}

fn inf_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Chooses the order-0 tridiagonal solver when it applies, else Cholesky.
pub fn fit(order_k: usize, xs: &[f64], ys: &[f64], lambda: f64) -> Result<KrrModel> {
    validate(xs, ys, lambda)?;
    if order_k == 0 && xs.len() >= FAST_PATH_MIN_N {
        if let Some(model) = fit_order_zero(xs, ys, lambda) {
            return Ok(model);
        }
    }
    fit_dense(order_k, xs, ys, lambda)
}

/// Dense Cholesky solve, refined against compensated residuals of the
/// unrounded system.
pub fn fit_dense(order_k: usize, xs: &[f64], ys: &[f64], lambda: f64) -> Result<KrrModel> {
    validate(xs, ys, lambda)?;
    let n = xs.len();
    let kernel = SobolevKernel::new(order_k);
    let km = kernel_matrix(&kernel, xs)?;
    let gram = km.entries();
    let shifted = |shift: f64| gram + DMatrix::identity(n, n) * shift;

    let mut jitter = 0.0;
    let chol = match shifted(lambda).cholesky() {
        Some(c) => c,
        None => {
            jitter = JITTER_SCALE * gram.trace() / n as f64;
            shifted(lambda + jitter).cholesky().ok_or(Error::Singular { jitter })?
        }
    };
    let shift = lambda + jitter;
    let rhs = DVector::from_vec(scaled_rhs(ys));
    let mut pi = chol.solve(&rhs);
    let mut r = compensated_residual(gram, shift, &pi, &rhs);
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        let step = chol.solve(&r);
        let size = step.amax();
        if !(size < last_step) {
            break;
        }
        pi += step;
        r = compensated_residual(gram, shift, &pi, &rhs);
        last_step = size;
        if size <= REFINE_STOP * pi.amax() {
            break;
        }
    }
    let residual = r.amax();
    let tolerance = residual_tolerance(ys);
    if !(residual <= tolerance) {
        return Err(Error::Residual {
            residual,
            tolerance,
        });
    }
    let rkhs_norm = pi.dot(&(gram * &pi)).max(0.0);
    let pi_hat: Vec<f64> = pi.iter().copied().collect();
    let index = (order_k == 0).then(|| OrderZeroIndex::new(xs, &pi_hat));
    Ok(KrrModel {
        order_k,
        xs: xs.to_vec(),
        pi_hat,
        lambda,
        rkhs_norm,
        jitter,
        residual,
        solver: Solver::Cholesky,
        kernel,
        index,
    })
}

/// `b − (G + shift·I) x` with each row accumulated in doubled precision
/// (error-free products and sums). The shift never enters a rounded
/// matrix, so refinement converges to the solve at the exact λ.
fn compensated_residual(gram: &DMatrix<f64>, shift: f64, x: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(gram.nrows(), |i, _| {
        let (mut hi, mut lo) = (b[i], 0.0);
        let mut add = |a: f64, v: f64| {
            let p = -a * v;
            let p_err = (-a).mul_add(v, -p);
            let (sum, sum_err) = two_sum(hi, p);
            hi = sum;
            lo += p_err + sum_err;
        };
        for j in 0..gram.ncols() {
            add(gram[(i, j)], x[j]);
        }
        add(shift, x[i]);
        hi + lo
    })
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Order-0 solve in O(n log n).
///
/// With design points `0 < s_1 < … < s_n`, the matrix `M = [min(s_i, s_j)]`
/// has a tridiagonal inverse `T`. The system matrix is
/// `(1/n)(11ᵀ + M) + λI`; the `M` part is inverted through
/// `(M + λnI)^{-1} = (I + λnT)^{-1} T` and the rank-one part by
/// Sherman–Morrison. Returns `None` when the design does not qualify or
/// the residual check fails, leaving the dense path to decide.
fn fit_order_zero(xs: &[f64], ys: &[f64], lambda: f64) -> Option<KrrModel> {
    let n = xs.len();
    let nf = n as f64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let s: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    if s[0] <= 0.0 || s.windows(2).any(|w| w[1] <= w[0]) {
        return None;
    }
    let inv_h: Vec<f64> = (0..n)
        .map(|i| 1.0 / if i == 0 { s[0] } else { s[i] - s[i - 1] })
        .collect();
    let diag: Vec<f64> = (0..n)
        .map(|i| inv_h[i] + if i + 1 < n { inv_h[i + 1] } else { 0.0 })
        .collect();
    // T[i][i+1] = -inv_h[i+1]
    let t_mul = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut out = diag[i] * v[i];
                if i > 0 {
                    out -= inv_h[i] * v[i - 1];
                }
                if i + 1 < n {
                    out -= inv_h[i + 1] * v[i + 1];
                }
                out
            })
            .collect()
    };
    let ln = lambda * nf;
    // (I + λnT) = tridiag(-ln/h, 1 + ln·diag, -ln/h), factored once.
    let mut c_prime = vec![0.0; n];
    let mut denom = vec![0.0; n];
    for i in 0..n {
        let a = if i > 0 { -ln * inv_h[i] } else { 0.0 };
        let b = 1.0 + ln * diag[i];
        let c = if i + 1 < n { -ln * inv_h[i + 1] } else { 0.0 };
        let d = b - if i > 0 { a * c_prime[i - 1] } else { 0.0 };
        denom[i] = d;
        c_prime[i] = c / d;
    }
    let b_solve = |v: &[f64]| -> Vec<f64> {
        let w = t_mul(v);
        if lambda == 0.0 {
            return w.iter().map(|x| x * nf).collect();
        }
        let mut u = vec![0.0; n];
        for i in 0..n {
            let a = if i > 0 { -ln * inv_h[i] } else { 0.0 };
            let prev = if i > 0 { a * u[i - 1] } else { 0.0 };
            u[i] = (w[i] - prev) / denom[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            u[i] -= c_prime[i] * u[i + 1];
        }
        u.iter().map(|x| x * nf).collect()
    };
    let ones = vec![1.0; n];
    let w1 = b_solve(&ones);
    let sm_denom = nf + w1.iter().sum::<f64>();
    let a_solve = |v: &[f64]| -> Vec<f64> {
        let u = b_solve(v);
        let f = u.iter().sum::<f64>() / sm_denom;
        u.iter().zip(&w1).map(|(a, b)| a - f * b).collect()
    };
    // (1/n)(Σπ + Σ_{j≤i} s_j π_j + s_i Σ_{j>i} π_j) + λπ_i
    let a_mul = |pi: &[f64]| -> Vec<f64> {
        let total: f64 = pi.iter().sum();
        let mut prefix = 0.0;
        let mut suffix = total;
        (0..n)
            .map(|i| {
                prefix += s[i] * pi[i];
                suffix -= pi[i];
                (total + prefix + s[i] * suffix) / nf + lambda * pi[i]
            })
            .collect()
    };

    let rhs_orig = scaled_rhs(ys);
    let rhs: Vec<f64> = order.iter().map(|&i| rhs_orig[i]).collect();
    let mut pi = a_solve(&rhs);
    let r: Vec<f64> = rhs.iter().zip(a_mul(&pi)).map(|(b, ax)| b - ax).collect();
    for (p, c) in pi.iter_mut().zip(a_solve(&r)) {
        *p += c;
    }
    let ax = a_mul(&pi);
    let residual = inf_norm_diff(&ax, &rhs);
    if !(residual <= residual_tolerance(ys)) {
        return None;
    }
    let rkhs_norm = pi
        .iter()
        .zip(&ax)
        .map(|(p, a)| p * (a - lambda * p))
        .sum::<f64>()
        .max(0.0);
    let mut pi_hat = vec![0.0; n];
    for (k, &i) in order.iter().enumerate() {
        pi_hat[i] = pi[k];
    }
    let index = OrderZeroIndex::new(xs, &pi_hat);
    Some(KrrModel {
        order_k: 0,
        xs: xs.to_vec(),
        pi_hat,
        lambda,
        rkhs_norm,
        jitter: 0.0,
        residual,
        solver: Solver::Tridiagonal,
        kernel: SobolevKernel::new(0),
        index: Some(index),
    })
}

/// The norm-constrained fit `min ‖Y − f‖² s.t. π̂ᵀ𝕂π̂ ≤ C̄²`, solved through
/// its ridge dual by bisection on `log λ`.
pub fn fit_constrained(order_k: usize, xs: &[f64], ys: &[f64], c_bar: f64) -> Result<KrrModel> {
    if !(c_bar > 0.0 && c_bar.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "norm bound must be positive, got {c_bar}"
        )));
    }
    validate(xs, ys, 0.0)?;
    let target = c_bar * c_bar;
    let tolerance = NORM_TOL * target;
    if let Ok(model) = fit(order_k, xs, ys, LAMBDA_MIN) {
        if model.rkhs_norm <= target {
            return Ok(model);
        }
    }
    let upper = fit(order_k, xs, ys, LAMBDA_MAX)?;
    if upper.rkhs_norm > target {
        return Err(Error::Bracket(format!(
            "norm {} still above {target} at lambda {LAMBDA_MAX}",
            upper.rkhs_norm
        )));
    }
    if target - upper.rkhs_norm <= tolerance {
        return Ok(upper);
    }
    let (mut lo, mut hi) = (LAMBDA_MIN.ln(), LAMBDA_MAX.ln());
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        match fit(order_k, xs, ys, mid.exp()) {
            Ok(model) if (model.rkhs_norm - target).abs() <= tolerance => return Ok(model),
            Ok(model) if model.rkhs_norm < target => hi = mid,
            // too large a norm, or too ill-conditioned to solve
            _ => lo = mid,
        }
    }
    Err(Error::NonConvergence {
        iterations: BISECTION_MAX_ITER,
        n: xs.len(),
    })
}

/// `(1/n)^{2(γ+1)/(2γ+3)}`.
pub fn lambda_large_n(n: u64, gamma: usize) -> f64 {
    let g = gamma as f64;
    (1.0 / n as f64).powf(2.0 * (g + 1.0) / (2.0 * g + 3.0))
}

/// Regularization matched to the regime, with all constants set to 1.
///
/// Small n and analytic classes: `(γ*+1)/n`. Large n:
/// `(1/n)^{2(γ+1)/(2γ+3)}`, scaled by `R^{-4(γ+1)/(2γ+3)}` for ellipsoids.
pub fn lambda_rule(report: &RegimeReport, sigma: f64, r_radius: f64) -> Result<f64> {
    if report.n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    if !(r_radius > 0.0 && r_radius.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "radius must be positive, got {r_radius}"
        )));
    }
    let n = report.n as f64;
    match (report.regime, report.gamma) {
        (Regime::SmallN | Regime::Analytic, _) => {
            let star = report
                .gamma_star
                .ok_or_else(|| Error::InvalidInput("small-n report without gamma*".into()))?;
            Ok((star + 1) as f64 / n)
        }
        (Regime::LargeN, Smoothness::Finite(gamma)) => {
            let base = lambda_large_n(report.n, gamma);
            if report.rate_class == RateClass::Ellipsoid {
                let g = gamma as f64;
                Ok(r_radius.powf(-4.0 * (g + 1.0) / (2.0 * g + 3.0)) * base)
            } else {
                Ok(base)
            }
        }
        (Regime::LargeN, Smoothness::Analytic) => Err(Error::InvalidInput(
            "large-n report for an analytic class".into(),
        )),
    }
}
