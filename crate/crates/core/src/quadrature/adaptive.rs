use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::kronrod::full_rule;
use super::{Integrand, QuadError};
use crate::maps::{DomainBox, Point};

/// Globally adaptive Gauss-Kronrod integrator on 1D intervals and 2D boxes.
///
/// Each panel carries a 15-point Kronrod estimate and the embedded 7-point
/// Gauss estimate (tensorized in 2D); `|K - G|` is the panel error. The panel
/// with the largest error is bisected (quartered in 2D) until the summed error
/// drops below `max(abs_tol, rel_tol·|value|)`. Panels that reach `max_depth`
/// are frozen; if the tolerance is still not met the result is returned with
/// `tolerance_met = false` rather than as an error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveIntegrator {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    pub max_panels: usize,
}

impl Default for AdaptiveIntegrator {
    fn default() -> Self {
        AdaptiveIntegrator {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            max_depth: 40,
            max_panels: 400_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveResult {
    pub value: f64,
    pub est_error: f64,
    pub tolerance_met: bool,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: Point,
    hi: Point,
    value: f64,
    err: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

impl AdaptiveIntegrator {
    pub fn new(rel_tol: f64) -> Self {
        AdaptiveIntegrator {
            rel_tol,
            ..Default::default()
        }
    }

    pub fn integrate<F: Integrand + ?Sized>(
        &self,
        domain: &DomainBox,
        f: &F,
    ) -> Result<AdaptiveResult, QuadError> {
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for i in 0..domain.dim() {
            lo[i] = domain.lo(i);
            hi[i] = domain.hi(i);
        }
        self.integrate_box(domain.dim(), lo, hi, f)
    }

    /// Integrates over `[lo, hi]` (first `dim` coordinates).
    pub fn integrate_box<F: Integrand + ?Sized>(
        &self,
        dim: usize,
        lo: Point,
        hi: Point,
        f: &F,
    ) -> Result<AdaptiveResult, QuadError> {
        if !(self.rel_tol > 0.0) {
            return Err(QuadError::InvalidRule(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        let rule = full_rule();
        let first = eval_panel(dim, lo, hi, 0, f, &rule)?;
        let mut heap = BinaryHeap::new();
        let mut frozen: Vec<Panel> = Vec::new();
        let mut value = first.value;
        let mut err = first.err;
        heap.push(first);
        let mut count = 1usize;
        loop {
            if err <= self.abs_tol.max(self.rel_tol * value.abs()) {
                break;
            }
            let Some(worst) = heap.pop() else { break };
            if worst.depth >= self.max_depth || count >= self.max_panels {
                frozen.push(worst);
                if count >= self.max_panels {
                    break;
                }
                continue;
            }
            value -= worst.value;
            err -= worst.err;
            for (clo, chi) in split(dim, &worst) {
                let c = eval_panel(dim, clo, chi, worst.depth + 1, f, &rule)?;
                value += c.value;
                err += c.err;
                heap.push(c);
            }
            count += if dim == 1 { 1 } else { 3 };
        }
        // Re-sum exactly; the running totals drift after many updates.
        let mut panels: Vec<Panel> = heap.into_vec();
        panels.extend(frozen);
        panels.sort_by(|a, b| {
            a.lo[0]
                .total_cmp(&b.lo[0])
                .then(a.lo[1].total_cmp(&b.lo[1]))
        });
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        Ok(AdaptiveResult {
            value,
            est_error: err,
            tolerance_met: err <= self.abs_tol.max(self.rel_tol * value.abs()),
            panels: panels.len(),
        })
    }
}

fn split(dim: usize, p: &Panel) -> Vec<(Point, Point)> {
    let mid = [0.5 * (p.lo[0] + p.hi[0]), 0.5 * (p.lo[1] + p.hi[1])];
    if dim == 1 {
        vec![(p.lo, [mid[0], 0.0]), ([mid[0], 0.0], p.hi)]
    } else {
        vec![
            (p.lo, mid),
            ([mid[0], p.lo[1]], [p.hi[0], mid[1]]),
            ([p.lo[0], mid[1]], [mid[0], p.hi[1]]),
            (mid, p.hi),
        ]
    }
}

fn eval_panel<F: Integrand + ?Sized>(
    dim: usize,
    lo: Point,
    hi: Point,
    depth: u32,
    f: &F,
    rule: &[(f64, f64, f64); 15],
) -> Result<Panel, QuadError> {
    let half = [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])];
    let mid = [0.5 * (hi[0] + lo[0]), 0.5 * (hi[1] + lo[1])];
    let mut k = 0.0;
    let mut g = 0.0;
    let check = |x: Point| -> Result<f64, QuadError> {
        let v = f.value(&x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite {
                index: 0,
                node: x,
                value: v,
            })
        }
    };
    if dim == 1 {
        for &(t, wk, wg) in rule {
            let v = check([mid[0] + half[0] * t, 0.0])?;
            k += wk * v;
            g += wg * v;
        }
        k *= half[0];
        g *= half[0];
    } else {
        for &(s, wks, wgs) in rule {
            let x = mid[0] + half[0] * s;
            let mut ks = 0.0;
            let mut gs = 0.0;
            for &(t, wkt, wgt) in rule {
                let v = check([x, mid[1] + half[1] * t])?;
                ks += wkt * v;
                gs += wgt * v;
            }
            k += wks * ks;
            g += wgs * gs;
        }
        k *= half[0] * half[1];
        g *= half[0] * half[1];
    }
    Ok(Panel {
        lo,
        hi,
        value: k,
        err: (k - g).abs(),
        depth,
    })
}
