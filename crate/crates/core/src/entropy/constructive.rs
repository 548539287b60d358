//! The two explicit sets behind the polynomial-subclass bounds: a
//! product-grid cover and a grid-times-hypercube packing. Both are
//! checked numerically on construction.

use serde::{Deserialize, Serialize};

use super::{b2_feasibility, check_delta, ClassKind, SmoothnessClassSpec};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

pub const DEFAULT_COVER_CAP: usize = 10_000_000;

/// Pairwise verification is quadratic in the member count.
pub const MAX_PACKING_MEMBERS: u64 = 20_000;

const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingSet {
    /// Monomial coefficient vectors, each of length γ+1.
    pub members: Vec<Vec<f64>>,
    pub delta: f64,
    pub m0: usize,
    pub b: f64,
    pub k_tilde: usize,
    /// Spacing of the grid along coordinate `k_tilde`.
    pub spacing: f64,
    /// Smallest pairwise L² distance found by the verification pass.
    pub min_distance: f64,
}

/// Builds the packing set and verifies pairwise separation `> delta` in
/// unweighted L² over the class domain.
///
/// Coordinate `k̃` runs over `M_0` evenly spaced points of
/// `[-R_k̃/k̃!, R_k̃/k̃!]`; every other coordinate `k` is either 0 or
/// `R_k δ / (b k! (γ+1))`, switched by the bits of `(i-1) mod 2^γ`.
pub fn build_packing_set(spec: &SmoothnessClassSpec, delta: f64, b: f64) -> Result<PackingSet> {
    spec.require_kind(&[ClassKind::PolySub])?;
    if !(b.is_finite() && b >= 1.0) {
        return Err(Error::InvalidInput(format!("b = {b} must be at least 1")));
    }
    let feas = b2_feasibility(spec, delta)?;
    if !feas.feasible {
        return Err(Error::Infeasible {
            delta,
            reason: format!(
                "M_0 = {} (need >= 2^{}) or grid spacing exceeds the coordinate range",
                feas.m0,
                spec.gamma() + 1
            ),
        });
    }
    if feas.m0 > MAX_PACKING_MEMBERS {
        return Err(Error::InvalidInput(format!(
            "M_0 = {} exceeds the verification limit of {MAX_PACKING_MEMBERS}",
            feas.m0
        )));
    }
    let gamma = spec.gamma();
    let m0 = feas.m0 as usize;
    let k_tilde = feas.k_tilde;
    let bounds = spec.coefficient_bounds();
    let half = bounds[k_tilde];
    // ceil() can push M_0 - 1 cells past the range; spread them over it
    let spacing = 2.0 * half / (m0 - 1) as f64;

    let gates: Vec<(usize, f64)> = (0..=gamma)
        .filter(|&k| k != k_tilde)
        .map(|k| (k, bounds[k] * delta / (b * (gamma as f64 + 1.0))))
        .collect();
    let pattern_count = 1usize << gamma.min(62);

    let members: Vec<Vec<f64>> = (0..m0)
        .map(|i| {
            let mut theta = vec![0.0; gamma + 1];
            theta[k_tilde] = if i + 1 == m0 { half } else { -half + spacing * i as f64 };
            let bits = i % pattern_count;
            for (bit, &(k, value)) in gates.iter().enumerate() {
                if (bits >> bit) & 1 == 1 {
                    theta[k] = value;
                }
            }
            theta
        })
        .collect();

    for (index, theta) in members.iter().enumerate() {
        if let Some(coord) = (0..=gamma).find(|&k| theta[k].abs() > bounds[k] * (1.0 + MEMBERSHIP_TOL)) {
            return Err(Error::MembershipFailure { index, coord });
        }
    }

    let gram = monomial_gram(gamma, spec.domain().lower(), spec.domain().upper());
    let mut min_distance = f64::INFINITY;
    let mut diff = vec![0.0; gamma + 1];
    for i in 0..m0 {
        for j in (i + 1)..m0 {
            for k in 0..=gamma {
                diff[k] = members[i][k] - members[j][k];
            }
            let dist = quadratic_form(&gram, &diff).max(0.0).sqrt();
            if dist <= delta {
                return Err(Error::SeparationFailure {
                    i,
                    j,
                    distance: dist,
                    delta,
                });
            }
            min_distance = min_distance.min(dist);
        }
    }

    Ok(PackingSet {
        members,
        delta,
        m0,
        b,
        k_tilde,
        spacing,
        min_distance,
    })
}

/// `G[a][b] = ∫ x^a x^b dx` over `[lo, hi]` by Gauss–Legendre quadrature,
/// exact for these degree-≤2γ integrands.
fn monomial_gram(gamma: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let rule = GaussLegendre::exact_for_degree(2 * gamma);
    let mut gram = vec![vec![0.0; gamma + 1]; gamma + 1];
    for (x, w) in rule.mapped(lo, hi) {
        let mut pa = 1.0;
        for a in 0..=gamma {
            let mut pb = pa;
            for b in a..=gamma {
                gram[a][b] += w * pb;
                pb *= x;
            }
            pa *= x;
        }
    }
    for a in 0..=gamma {
        for b in 0..a {
            gram[a][b] = gram[b][a];
        }
    }
    gram
}

fn quadratic_form(gram: &[Vec<f64>], v: &[f64]) -> f64 {
    gram.iter()
        .zip(v)
        .map(|(row, vi)| vi * row.iter().zip(v).map(|(g, vj)| g * vj).sum::<f64>())
        .sum()
}

/// Product of per-coordinate grids over the coefficient polyhedron.
///
/// Each coordinate grid includes both endpoints of `[-R_k/k!, R_k/k!]`
/// with spacing at most `2δ/(γ+1)`, so every polyhedron point is within
/// `δ` of a grid point in l1 and therefore in sup norm on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCover {
    delta: f64,
    axes: Vec<Vec<f64>>,
}

impl ProductCover {
    pub fn new(spec: &SmoothnessClassSpec, delta: f64) -> Result<Self> {
        spec.require_kind(&[ClassKind::PolySub])?;
        check_delta(delta)?;
        let share = delta / (spec.gamma() as f64 + 1.0);
        let axes = spec
            .coefficient_bounds()
            .into_iter()
            .map(|half| {
                let cells = (half / share).ceil().max(1.0);
                if cells > 1e9 {
                    return Err(Error::CoverTooLarge {
                        size: cells,
                        cap: DEFAULT_COVER_CAP,
                    });
                }
                let cells = cells as usize;
                let step = 2.0 * half / cells as f64;
                Ok((0..=cells)
                    .map(|i| if i == cells { half } else { -half + step * i as f64 })
                    .collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self { delta, axes })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn axis_sizes(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn log_size(&self) -> f64 {
        self.axes.iter().map(|a| (a.len() as f64).ln()).sum()
    }

    /// Nearest cover element to `theta` and its l1 distance.
    pub fn nearest(&self, theta: &[f64]) -> Result<(Vec<f64>, f64)> {
        if theta.len() != self.axes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.axes.len(),
                got: theta.len(),
            });
        }
        let mut l1 = 0.0;
        let point = theta
            .iter()
            .zip(&self.axes)
            .map(|(&t, axis)| {
                let idx = axis.partition_point(|&g| g < t);
                let best = [idx.saturating_sub(1), idx.min(axis.len() - 1)]
                    .into_iter()
                    .map(|i| axis[i])
                    .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()))
                    .expect("non-empty axis");
                l1 += (best - t).abs();
                best
            })
            .collect();
        Ok((point, l1))
    }

    /// Enumerates the Cartesian product, refusing if it exceeds `cap`.
    pub fn materialize(&self, cap: usize) -> Result<Vec<Vec<f64>>> {
        let size = self.log_size().exp();
        if size > cap as f64 * (1.0 + 1e-9) {
            return Err(Error::CoverTooLarge { size, cap });
        }
        let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(self.axes.len())];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&g| {
                        let mut p = prefix.clone();
                        p.push(g);
                        p
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

/// The product cover as an explicit list of coefficient vectors.
pub fn build_product_cover(spec: &SmoothnessClassSpec, delta: f64, cap: usize) -> Result<Vec<Vec<f64>>> {
    ProductCover::new(spec, delta)?.materialize(cap)
}
