//! Integrated and empirical squared errors under the uniform design density.

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Gauss–Legendre nodes per panel of the composite rule.
pub const NODES_PER_PANEL: usize = 8;
pub const MIN_QUAD_POINTS: usize = 8;

/// Composite Gauss–Legendre rule on [0, 1] with at least the requested
/// number of points, rounded up to whole panels.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    points: Vec<(f64, f64)>,
}

impl QuadratureGrid {
    pub fn new(quad_points: usize) -> Result<Self> {
        if quad_points < MIN_QUAD_POINTS {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_QUAD_POINTS} quadrature points, got {quad_points}"
            )));
        }
        let panels = quad_points.div_ceil(NODES_PER_PANEL);
        Ok(Self {
            points: GaussLegendre::new(NODES_PER_PANEL).composite_points(0.0, 1.0, panels),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().map(|&(x, w)| w * f(x)).sum()
    }
}

/// `∫_0^1 (f̂ − f)²`.
pub fn ise<F, G>(f_hat: F, f: G, quad_points: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let grid = QuadratureGrid::new(quad_points)?;
    Ok(ise_on(&grid, f_hat, f))
}

pub fn ise_on<F, G>(grid: &QuadratureGrid, f_hat: F, f: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    grid.integrate(|x| {
        let d = f_hat(x) - f(x);
        d * d
    })
}

/// `(1/n) Σ (f̂(x_i) − f(x_i))²`.
pub fn smse<F, G>(f_hat: F, f: G, xs: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if xs.is_empty() {
        return Err(Error::InvalidInput("smse needs at least one point".into()));
    }
    let sum: f64 = xs
        .iter()
        .map(|&x| {
            let d = f_hat(x) - f(x);
            d * d
        })
        .sum();
    Ok(sum / xs.len() as f64)
}

/// KL divergence between the Gaussian data laws of two regression
/// functions: `(n/(2σ²)) ∫ (f − g)²`.
pub fn kl_pair<F, G>(f: F, g: G, n: u64, sigma: f64, quad_points: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    Ok(n as f64 / (2.0 * sigma * sigma) * ise(f, g, quad_points)?)
}
