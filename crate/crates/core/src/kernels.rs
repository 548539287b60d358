//! Sobolev reproducing kernels on [0, 1] and their Gram matrices.
//!
//! `K_{k+1}(x, x') = Σ_{j≤k} x^j x'^j / (j!)² + ∫_0^{x∧x'} (x-t)^k (x'-t)^k / (k!)² dt`
//! for k > 0, and `1 + x ∧ x'` for k = 0. The first sum spans the degree-k
//! polynomials, the integral the functions whose first k+1 derivatives
//! vanish at the origin.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Eigenvalues in `(-EIGEN_CLAMP, 0)` are rounding noise and reported as 0.
pub const EIGEN_CLAMP: f64 = 1e-9;

const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "KernelOrder", into = "KernelOrder")]
pub struct SobolevKernel {
    order: usize,
    /// `1/(j!)²`, j = 0..=order.
    inv_fact_sq: Vec<f64>,
    rule: GaussLegendre,
}

#[derive(Serialize, Deserialize)]
struct KernelOrder {
    order: usize,
}

impl From<KernelOrder> for SobolevKernel {
    fn from(k: KernelOrder) -> Self {
        SobolevKernel::new(k.order)
    }
}

impl From<SobolevKernel> for KernelOrder {
    fn from(k: SobolevKernel) -> Self {
        KernelOrder { order: k.order }
    }
}

impl PartialEq for SobolevKernel {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order
    }
}

impl SobolevKernel {
    pub fn new(order: usize) -> Self {
        let mut inv_fact = 1.0;
        let inv_fact_sq = (0..=order)
            .map(|j| {
                if j > 0 {
                    inv_fact /= j as f64;
                }
                inv_fact * inv_fact
            })
            .collect();
        Self {
            order,
            inv_fact_sq,
            // (x-t)^k (x'-t)^k has degree 2k: k+1 nodes are exact
            rule: GaussLegendre::new(order + 1),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        check_unit(x)?;
        check_unit(y)?;
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: f64, y: f64) -> f64 {
        let lo = x.min(y);
        if self.order == 0 {
            return 1.0 + lo;
        }
        let k = self.order as i32;
        let xy = x * y;
        let mut power = 1.0;
        let mut poly = 0.0;
        for c in &self.inv_fact_sq {
            poly += power * c;
            power *= xy;
        }
        if lo <= 0.0 {
            return poly;
        }
        let spline: f64 = self
            .rule
            .mapped(0.0, lo)
            .map(|(t, w)| w * ((x - t) * (y - t)).powi(k))
            .sum();
        poly + spline * self.inv_fact_sq[self.order]
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            value: x,
            lower: 0.0,
            upper: 1.0,
        })
    }
}

pub(crate) fn check_design(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("design has no points".into()));
    }
    xs.iter().try_for_each(|&x| check_unit(x))
}

/// `(1/n) K(x_i, x_j)`, with its spectrum computed on first use.
#[derive(Debug)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
    xs: Vec<f64>,
    order: usize,
    eigenvalues: OnceLock<Result<Vec<f64>>>,
}

impl KernelMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    /// Descending eigenvalues with rounding-level negatives set to 0.
    pub fn eigenvalues(&self) -> Result<&[f64]> {
        self.eigenvalues
            .get_or_init(|| {
                let mut values = symmetric_eigenvalues(&self.entries)?;
                for v in &mut values {
                    if *v < 0.0 && *v > -EIGEN_CLAMP {
                        *v = 0.0;
                    }
                }
                Ok(values)
            })
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }
}

pub fn kernel_matrix(kernel: &SobolevKernel, xs: &[f64]) -> Result<KernelMatrix> {
    check_design(xs)?;
    let n = xs.len();
    let scale = 1.0 / n as f64;
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = scale * kernel.eval_unchecked(xs[i], xs[j]);
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(KernelMatrix {
        entries,
        xs: xs.to_vec(),
        order: kernel.order(),
        eigenvalues: OnceLock::new(),
    })
}

/// All eigenvalues of a symmetric matrix, descending.
pub fn symmetric_eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    if n == 0 || matrix.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "need a non-empty square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, EIGEN_MAX_ITER).ok_or(
        Error::NonConvergence {
            iterations: EIGEN_MAX_ITER,
            n,
        },
    )?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// `πᵀ 𝕂 π`, floored at zero.
pub fn rkhs_norm_sq(pi: &[f64], km: &KernelMatrix) -> Result<f64> {
    let n = km.n();
    if pi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: pi.len(),
        });
    }
    let v = nalgebra::DVector::from_column_slice(pi);
    Ok(v.dot(&(km.entries() * &v)).max(0.0))
}
