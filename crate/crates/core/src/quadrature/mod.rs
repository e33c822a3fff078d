//! Quadrature: fixed tensor Gauss-Legendre rules for loss evaluation, composite
//! rules aligned to known breakpoints, and an adaptive Gauss-Kronrod reference
//! integrator.

mod adaptive;
mod arrangement;
pub mod gauss;
pub mod kronrod;

use rayon::prelude::*;
use thiserror::Error;

use crate::maps::{DomainBox, Point};

pub use adaptive::{AdaptiveIntegrator, AdaptiveResult};
pub use arrangement::{arrangement_rule, Line};

/// Rules above this many nodes evaluate their integrand in parallel.
const PAR_THRESHOLD: usize = 4096;
const CHUNK: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature order must be at least {min}, got {got}")]
    OrderTooSmall { min: usize, got: usize },
    #[error("invalid Gauss-Legendre order {0}")]
    InvalidOrder(usize),
    #[error("Newton iteration for node {index} of the {order}-point rule did not converge")]
    NoConvergence { order: usize, index: usize },
    #[error("integrand is not finite at node {index} ({node:?}): {value}")]
    NonFinite {
        index: usize,
        node: Point,
        value: f64,
    },
    #[error("norm exponent must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("invalid rule: {0}")]
    InvalidRule(String),
}

/// Anything that can be evaluated pointwise.
pub trait Integrand: Sync {
    fn value(&self, x: &Point) -> f64;
}

impl<F: Fn(&Point) -> f64 + Sync> Integrand for F {
    fn value(&self, x: &Point) -> f64 {
        self(x)
    }
}

/// Nodes and positive weights on a domain box.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    dim: usize,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    order_per_dim: usize,
}

impl QuadRule {
    /// Tensor-product Gauss-Legendre rule with `n_per_dim` points per axis.
    pub fn gauss(domain: &DomainBox, n_per_dim: usize) -> Result<Self, QuadError> {
        if n_per_dim < 2 {
            return Err(QuadError::OrderTooSmall {
                min: 2,
                got: n_per_dim,
            });
        }
        let axes = (0..domain.dim())
            .map(|i| gauss::gauss_legendre_on(n_per_dim, domain.lo(i), domain.hi(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::tensor(&axes, n_per_dim))
    }

    /// Composite Gauss rule: each axis is split at `breaks[axis]` (points
    /// outside the open interval are ignored) and every panel carries an
    /// `n_per_panel`-point Gauss rule. 2D rules are tensor products.
    pub fn composite(
        domain: &DomainBox,
        breaks: &[Vec<f64>],
        n_per_panel: usize,
    ) -> Result<Self, QuadError> {
        if n_per_panel < 1 {
            return Err(QuadError::OrderTooSmall {
                min: 1,
                got: n_per_panel,
            });
        }
        let mut axes = Vec::with_capacity(domain.dim());
        for i in 0..domain.dim() {
            let (lo, hi) = (domain.lo(i), domain.hi(i));
            let mut pts: Vec<f64> = breaks
                .get(i)
                .map(|b| b.iter().copied().filter(|&t| t > lo && t < hi).collect())
                .unwrap_or_default();
            pts.push(lo);
            pts.push(hi);
            pts.sort_by(f64::total_cmp);
            pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
            let (ref_x, ref_w) = gauss::gauss_legendre(n_per_panel)?;
            let mut xs = Vec::new();
            let mut ws = Vec::new();
            for p in pts.windows(2) {
                let half = 0.5 * (p[1] - p[0]);
                if half <= 0.0 {
                    continue;
                }
                let mid = 0.5 * (p[0] + p[1]);
                for (t, w) in ref_x.iter().zip(&ref_w) {
                    xs.push(mid + half * t);
                    ws.push(half * w);
                }
            }
            axes.push((xs, ws));
        }
        Ok(Self::tensor(&axes, n_per_panel))
    }

    /// Composite rule on `cells` equal panels per axis.
    pub fn cell_aligned(
        domain: &DomainBox,
        cells_per_dim: &[usize],
        n_per_panel: usize,
    ) -> Result<Self, QuadError> {
        let breaks: Vec<Vec<f64>> = (0..domain.dim())
            .map(|i| {
                let c = cells_per_dim.get(i).copied().unwrap_or(1).max(1);
                (1..c)
                    .map(|k| domain.lo(i) + domain.width(i) * k as f64 / c as f64)
                    .collect()
            })
            .collect();
        Self::composite(domain, &breaks, n_per_panel)
    }

    /// 1D composite rule graded geometrically (ratio 1/2) toward the lower end
    /// of the interval, down to panel width `min_width`, with extra breakpoints.
    pub fn graded_1d(
        domain: &DomainBox,
        extra_breaks: &[f64],
        min_width: f64,
        n_per_panel: usize,
    ) -> Result<Self, QuadError> {
        let lo = domain.lo(0);
        let mut breaks: Vec<f64> = extra_breaks.to_vec();
        let mut w = domain.width(0);
        while w > min_width {
            w *= 0.5;
            breaks.push(lo + w);
        }
        Self::composite(domain, &[breaks], n_per_panel)
    }

    /// Builds a rule from explicit parts; weights must be positive and finite.
    pub fn from_parts(
        dim: usize,
        nodes: Vec<Point>,
        weights: Vec<f64>,
        order_per_dim: usize,
    ) -> Result<Self, QuadError> {
        if nodes.len() != weights.len() {
            return Err(QuadError::InvalidRule(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(QuadError::InvalidRule(format!("weight {w} is not positive")));
        }
        Ok(QuadRule {
            dim,
            nodes,
            weights,
            order_per_dim,
        })
    }

    fn tensor(axes: &[(Vec<f64>, Vec<f64>)], order: usize) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        match axes.len() {
            1 => {
                for (x, w) in axes[0].0.iter().zip(&axes[0].1) {
                    nodes.push([*x, 0.0]);
                    weights.push(*w);
                }
            }
            _ => {
                for (x, wx) in axes[0].0.iter().zip(&axes[0].1) {
                    for (y, wy) in axes[1].0.iter().zip(&axes[1].1) {
                        nodes.push([*x, *y]);
                        weights.push(wx * wy);
                    }
                }
            }
        }
        QuadRule {
            dim: axes.len(),
            nodes,
            weights,
            order_per_dim: order,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order_per_dim(&self) -> usize {
        self.order_per_dim
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Integrand values at every node, in node order.
    pub fn values<F: Integrand + ?Sized>(&self, f: &F) -> Result<Vec<f64>, QuadError> {
        let vals: Vec<f64> = if self.nodes.len() >= PAR_THRESHOLD {
            self.nodes
                .par_chunks(CHUNK)
                .flat_map_iter(|c| c.iter().map(|x| f.value(x)))
                .collect()
        } else {
            self.nodes.iter().map(|x| f.value(x)).collect()
        };
        if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
            return Err(QuadError::NonFinite {
                index: i,
                node: self.nodes[i],
                value: vals[i],
            });
        }
        Ok(vals)
    }

    /// `Σ w_i f(x_i)`, summed in node order.
    pub fn integrate<F: Integrand + ?Sized>(&self, f: &F) -> Result<f64, QuadError> {
        let vals = self.values(f)?;
        Ok(self.weights.iter().zip(&vals).map(|(w, v)| w * v).sum())
    }

    /// `(Σ w_i |f(x_i)|^p)^{1/p}`.
    pub fn lp_norm<F: Integrand + ?Sized>(&self, f: &F, p: f64) -> Result<f64, QuadError> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(QuadError::InvalidExponent(p));
        }
        let vals = self.values(f)?;
        let s: f64 = self
            .weights
            .iter()
            .zip(&vals)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum();
        Ok(s.powf(1.0 / p))
    }

    pub fn l2_norm<F: Integrand + ?Sized>(&self, f: &F) -> Result<f64, QuadError> {
        let vals = self.values(f)?;
        let s: f64 = self.weights.iter().zip(&vals).map(|(w, v)| w * v * v).sum();
        Ok(s.sqrt())
    }
}
