use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::galerkin::{Basis, BasisKind};
use crate::maps::Point;
use crate::network::NetParams;
use crate::quadrature::QuadRule;
use crate::transfer::{DampedProblem, FormPath};

/// Points per parallel chunk; fixed so reductions do not depend on the
/// thread count.
const CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(∫ |f0 - u + a P u|^p)^{1/p}`.
    PinnsLp,
    /// `√Σ_m (l(g_m) - b(u, g_m))²` over an orthonormal test basis.
    RvpinnsL2,
}

/// Which loss, on which rule.
#[derive(Debug, Clone)]
pub struct LossSpec {
    pub kind: LossKind,
    pub p: f64,
    pub test_basis: Option<Basis>,
    pub rule: QuadRule,
    /// Rule for the load vector `l(g_m)`; defaults to `rule`.
    pub load_rule: Option<QuadRule>,
    pub path: FormPath,
}

impl LossSpec {
    pub fn pinns(rule: QuadRule, p: f64) -> Result<Self, TrainError> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(TrainError::InvalidSpec(format!("norm exponent {p} must exceed 1")));
        }
        Ok(LossSpec {
            kind: LossKind::PinnsLp,
            p,
            test_basis: None,
            rule,
            load_rule: None,
            path: FormPath::Pf,
        })
    }

    /// The basis must be a normalized-indicator basis; its orthonormality is
    /// confirmed on the partition-aligned rule.
    pub fn rvpinns(basis: Basis, rule: QuadRule, path: FormPath) -> Result<Self, TrainError> {
        if basis.kind() != BasisKind::NormalizedIndicator {
            return Err(TrainError::InvalidSpec(
                "RVPINNs test functions must be normalized indicators".into(),
            ));
        }
        let gram = basis.gram(&basis.partition().aligned_rule(2)?);
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let e = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - e).abs() > 1e-10 {
                    return Err(TrainError::InvalidSpec(format!(
                        "test basis is not orthonormal: G[{i},{j}] = {}",
                        gram[(i, j)]
                    )));
                }
            }
        }
        Ok(LossSpec {
            kind: LossKind::RvpinnsL2,
            p: 2.0,
            test_basis: Some(basis),
            rule,
            load_rule: None,
            path,
        })
    }

    pub fn with_load_rule(mut self, rule: QuadRule) -> Self {
        self.load_rule = Some(rule);
        self
    }

    pub fn with_path(mut self, path: FormPath) -> Self {
        self.path = path;
        self
    }

    /// Precomputes the residual operator for `prob`.
    pub fn compile(&self, prob: &DampedProblem) -> Result<Loss, TrainError> {
        match self.kind {
            LossKind::PinnsLp => Ok(Loss::pinns(prob, &self.rule, self.p)?),
            LossKind::RvpinnsL2 => {
                let basis = self.test_basis.as_ref().ok_or_else(|| {
                    TrainError::InvalidSpec("RVPINNs loss needs a test basis".into())
                })?;
                let loads = basis.moments(&prob.f0, self.load_rule.as_ref().unwrap_or(&self.rule))?;
                Ok(Loss::rvpinns(prob, basis, &self.rule, self.path, &loads))
            }
        }
    }
}

/// A loss built from residuals that are affine in network point values:
/// `r_k = t_k - Σ_e A_ke u(x_e)` and `loss = (Σ_k ω_k |r_k|^p)^{1/p}`.
#[derive(Debug, Clone)]
pub struct Loss {
    points: Vec<Point>,
    targets: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    coefs: Vec<f64>,
    row_weights: Vec<f64>,
    p: f64,
}

/// Loss value with the gradient of the optimizer objective `loss²`.
#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: f64,
    pub objective: f64,
    pub grad: Vec<f64>,
}

struct Builder {
    points: Vec<Point>,
    targets: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    coefs: Vec<f64>,
    row_weights: Vec<f64>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            points: Vec::new(),
            targets: Vec::new(),
            row_ptr: vec![0],
            cols: Vec::new(),
            coefs: Vec::new(),
            row_weights: Vec::new(),
        }
    }

    fn point(&mut self, x: Point) -> usize {
        self.points.push(x);
        self.points.len() - 1
    }

    fn term(&mut self, col: usize, coef: f64) {
        if coef != 0.0 {
            self.cols.push(col);
            self.coefs.push(coef);
        }
    }

    fn end_row(&mut self, target: f64, weight: f64) {
        self.targets.push(target);
        self.row_weights.push(weight);
        self.row_ptr.push(self.cols.len());
    }

    fn finish(self, p: f64) -> Loss {
        Loss {
            points: self.points,
            targets: self.targets,
            row_ptr: self.row_ptr,
            cols: self.cols,
            coefs: self.coefs,
            row_weights: self.row_weights,
            p,
        }
    }
}

impl Loss {
    /// One residual row per quadrature node: `f0(x) - u(x) + a Σ wt u(y)`.
    pub fn pinns(prob: &DampedProblem, rule: &QuadRule, p: f64) -> Result<Self, TrainError> {
        let f0 = rule.values(&prob.f0)?;
        let mut b = Builder::new();
        for ((x, w), t) in rule.nodes().iter().zip(rule.weights()).zip(f0) {
            let e = b.point(*x);
            b.term(e, 1.0);
            for (y, wt) in prob.map.pf_branches(x) {
                let e = b.point(y);
                b.term(e, -prob.alpha * wt);
            }
            b.end_row(t, *w);
        }
        Ok(b.finish(p))
    }

    /// One residual row per test function: `l(g_m) - b(u, g_m)`, with `b`
    /// taken in the requested form.
    pub fn rvpinns(
        prob: &DampedProblem,
        basis: &Basis,
        rule: &QuadRule,
        path: FormPath,
        loads: &[f64],
    ) -> Self {
        let m = basis.len();
        // Per test function: (point index, coefficient).
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut b = Builder::new();
        for (x, &w) in rule.nodes().iter().zip(rule.weights()) {
            let e = b.point(*x);
            let sx = basis.support(x);
            match path {
                FormPath::Pf => {
                    if sx.is_empty() {
                        continue;
                    }
                    let pre: Vec<(usize, f64)> = prob
                        .map
                        .pf_branches(x)
                        .into_iter()
                        .map(|(y, wt)| (b.point(y), wt))
                        .collect();
                    for &(i, g) in &sx {
                        rows[i].push((e, w * g));
                        for &(ey, wt) in &pre {
                            rows[i].push((ey, -prob.alpha * w * g * wt));
                        }
                    }
                }
                FormPath::Koopman => {
                    for &(i, g) in &sx {
                        rows[i].push((e, w * g));
                    }
                    for (i, g) in basis.support(&prob.map.forward_unchecked(x)) {
                        rows[i].push((e, -prob.alpha * w * g));
                    }
                }
            }
        }
        for (row, &l) in rows.into_iter().zip(loads) {
            for (e, c) in row {
                b.term(e, c);
            }
            b.end_row(l, 1.0);
        }
        b.finish(2.0)
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    fn point_values(&self, params: &NetParams) -> Vec<f64> {
        if self.points.len() >= 2 * CHUNK {
            self.points.par_iter().map(|x| params.eval(x)).collect()
        } else {
            self.points.iter().map(|x| params.eval(x)).collect()
        }
    }

    /// Residual vector `r_k`.
    pub fn residuals(&self, params: &NetParams) -> Vec<f64> {
        let u = self.point_values(params);
        (0..self.n_rows())
            .map(|k| {
                let span = self.row_ptr[k]..self.row_ptr[k + 1];
                let s: f64 = self.cols[span.clone()]
                    .iter()
                    .zip(&self.coefs[span])
                    .map(|(&e, &c)| c * u[e])
                    .sum();
                self.targets[k] - s
            })
            .collect()
    }

    fn phi(&self, r: &[f64]) -> f64 {
        if self.p == 2.0 {
            r.iter().zip(&self.row_weights).map(|(r, w)| w * r * r).sum()
        } else {
            r.iter()
                .zip(&self.row_weights)
                .map(|(r, w)| w * r.abs().powf(self.p))
                .sum()
        }
    }

    pub fn value(&self, params: &NetParams) -> f64 {
        self.phi(&self.residuals(params)).powf(1.0 / self.p)
    }

    /// Loss, `loss²`, and `∇(loss²)`.
    pub fn evaluate(&self, params: &NetParams) -> LossEval {
        let r = self.residuals(params);
        let phi = self.phi(&r);
        let loss = phi.powf(1.0 / self.p);
        let n = params.n_params();
        if phi == 0.0 {
            return LossEval {
                loss,
                objective: 0.0,
                grad: vec![0.0; n],
            };
        }
        // d(loss²)/dΦ
        let outer = if self.p == 2.0 {
            1.0
        } else {
            2.0 / self.p * phi.powf(2.0 / self.p - 1.0)
        };
        // Adjoint per evaluation point: ∂(loss²)/∂u(x_e).
        let mut adj = vec![0.0; self.points.len()];
        for k in 0..self.n_rows() {
            let dr = if self.p == 2.0 {
                2.0 * r[k]
            } else {
                self.p * r[k].abs().powf(self.p - 1.0) * r[k].signum()
            };
            let s = -outer * self.row_weights[k] * dr;
            for idx in self.row_ptr[k]..self.row_ptr[k + 1] {
                adj[self.cols[idx]] += s * self.coefs[idx];
            }
        }
        let partial = |range: std::ops::Range<usize>| {
            let mut g = vec![0.0; n];
            for e in range {
                if adj[e] != 0.0 {
                    params.accumulate_grad(&self.points[e], adj[e], &mut g);
                }
            }
            g
        };
        let chunks: Vec<std::ops::Range<usize>> = (0..self.points.len())
            .step_by(CHUNK)
            .map(|s| s..(s + CHUNK).min(self.points.len()))
            .collect();
        let parts: Vec<Vec<f64>> = if chunks.len() > 1 {
            chunks.into_par_iter().map(partial).collect()
        } else {
            chunks.into_iter().map(partial).collect()
        };
        let mut grad = vec![0.0; n];
        for part in parts {
            for (g, p) in grad.iter_mut().zip(part) {
                *g += p;
            }
        }
        LossEval {
            loss,
            objective: loss * loss,
            grad,
        }
    }

    /// Gradient of the unsquared loss (zero where the loss vanishes).
    pub fn loss_gradient(&self, params: &NetParams) -> (f64, Vec<f64>) {
        let ev = self.evaluate(params);
        if ev.loss == 0.0 {
            return (0.0, ev.grad);
        }
        let s = 0.5 / ev.loss;
        (ev.loss, ev.grad.into_iter().map(|g| s * g).collect())
    }
}
