//! Rules aligned to a line arrangement.
//!
//! For a rectangle cut by lines `a x + b y + c = 0`, the integrand classes we
//! care about (ReLU networks, their pullbacks under affine map branches, and
//! products with cell indicators) are linear on every face of the
//! arrangement. Splitting `y` at every vertex height and `x` at every line
//! crossing makes the inner integral exact on each `x`-panel and the outer
//! integrand a quadratic in `y` between vertex heights, so low-order Gauss
//! rules on the resulting panels integrate such functions exactly.

use super::gauss::gauss_legendre;
use super::{QuadError, QuadRule};
use crate::maps::{DomainBox, Point};

/// The line `a x + b y + c = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Line {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Line { a, b, c }
    }

    pub fn vertical(x: f64) -> Self {
        Line::new(1.0, 0.0, -x)
    }

    pub fn horizontal(y: f64) -> Self {
        Line::new(0.0, 1.0, -y)
    }

    fn x_at(&self, y: f64) -> Option<f64> {
        (self.a != 0.0).then(|| -(self.b * y + self.c) / self.a)
    }

    fn y_at(&self, x: f64) -> Option<f64> {
        (self.b != 0.0).then(|| -(self.a * x + self.c) / self.b)
    }
}

fn sorted_unique(mut v: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    v.retain(|t| t.is_finite() && *t > lo && *t < hi);
    v.push(lo);
    v.push(hi);
    v.sort_by(f64::total_cmp);
    let scale = (hi - lo).abs().max(1.0);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * scale);
    v
}

/// A 2D rule on `domain` exact for integrands that are polynomials of degree
/// `< 2 n_x` in `x` on each arrangement face, provided the outer `y`
/// integrand has degree `< 2 n_y` between vertex heights.
pub fn arrangement_rule(
    domain: &DomainBox,
    lines: &[Line],
    n_x: usize,
    n_y: usize,
) -> Result<QuadRule, QuadError> {
    if domain.dim() != 2 {
        return Err(QuadError::InvalidRule(
            "arrangement rules are two-dimensional".into(),
        ));
    }
    let (x0, x1) = (domain.lo(0), domain.hi(0));
    let (y0, y1) = (domain.lo(1), domain.hi(1));
    let lines: Vec<Line> = lines
        .iter()
        .copied()
        .filter(|l| (l.a != 0.0 || l.b != 0.0) && l.a.is_finite() && l.b.is_finite())
        .collect();

    let mut ys = Vec::new();
    for l in &lines {
        if l.a == 0.0 {
            ys.push(-l.c / l.b);
            continue;
        }
        for x in [x0, x1] {
            if let Some(y) = l.y_at(x) {
                ys.push(y);
            }
        }
    }
    for (i, p) in lines.iter().enumerate() {
        for q in &lines[i + 1..] {
            let det = p.a * q.b - p.b * q.a;
            if det.abs() <= 1e-300 {
                continue;
            }
            let x = (p.b * q.c - q.b * p.c) / det;
            let y = (q.a * p.c - p.a * q.c) / det;
            if x > x0 && x < x1 {
                ys.push(y);
            }
        }
    }
    let ys = sorted_unique(ys, y0, y1);

    let (gx, wx) = gauss_legendre(n_x)?;
    let (gy, wy) = gauss_legendre(n_y)?;
    let mut nodes: Vec<Point> = Vec::new();
    let mut weights = Vec::new();
    let mut xs = Vec::with_capacity(lines.len() + 2);
    for panel in ys.windows(2) {
        let hy = 0.5 * (panel[1] - panel[0]);
        if hy <= 0.0 {
            continue;
        }
        let my = 0.5 * (panel[0] + panel[1]);
        for (t, w) in gy.iter().zip(&wy) {
            let y = my + hy * t;
            xs.clear();
            xs.extend(lines.iter().filter_map(|l| l.x_at(y)));
            let row = sorted_unique(std::mem::take(&mut xs), x0, x1);
            for seg in row.windows(2) {
                let hx = 0.5 * (seg[1] - seg[0]);
                if hx <= 0.0 {
                    continue;
                }
                let mx = 0.5 * (seg[0] + seg[1]);
                for (s, v) in gx.iter().zip(&wx) {
                    nodes.push([mx + hx * s, y]);
                    weights.push(hy * w * hx * v);
                }
            }
            xs = row;
        }
    }
    QuadRule::from_parts(2, nodes, weights, n_x.max(n_y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> DomainBox {
        DomainBox::new(&[0.0, 0.0], &[1.0, 1.0], &[false, false]).unwrap()
    }

    #[test]
    fn relu_over_slanted_line_is_exact() {
        let line = Line::new(1.0, 2.0, -1.0);
        let rule = arrangement_rule(&unit_square(), &[line], 1, 2).unwrap();
        let v = rule
            .integrate(&|p: &Point| (p[0] + 2.0 * p[1] - 1.0).max(0.0))
            .unwrap();
        // For fixed y: ∫_0^1 max(x + 2y - 1, 0) dx.
        //   y <= 1/2: kink at x = 1 - 2y, value (2y)^2 / 2
        //   y >  1/2: integrand positive, value 1/2 + 2y - 1
        // ∫_0^{1/2} 2y^2 dy + ∫_{1/2}^1 (2y - 1/2) dy = 1/12 + 1/2
        let exact = 1.0 / 12.0 + 0.5;
        assert!((v - exact).abs() < 1e-14, "{v}");
    }

    #[test]
    fn indicator_of_sheared_band_is_exact() {
        let lines = [Line::new(1.0, -1.0, -0.2), Line::new(1.0, -1.0, 0.3)];
        let rule = arrangement_rule(&unit_square(), &lines, 1, 2).unwrap();
        let v = rule
            .integrate(&|p: &Point| {
                let t = p[0] - p[1];
                if (-0.3..0.2).contains(&t) {
                    1.0
                } else {
                    0.0
                }
            })
            .unwrap();
        // 1 - (0.8^2 + 0.7^2) / 2
        let exact = 1.0 - 0.5 * (0.64 + 0.49);
        assert!((v - exact).abs() < 1e-14, "{v}");
    }

    #[test]
    fn weights_cover_the_box() {
        let lines: Vec<Line> = (0..10)
            .map(|i| Line::new(1.0, 0.3 * i as f64 - 1.0, -0.1 * i as f64))
            .collect();
        let rule = arrangement_rule(&unit_square(), &lines, 2, 2).unwrap();
        assert!((rule.weight_sum() - 1.0).abs() < 1e-13);
    }
}
