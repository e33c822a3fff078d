//! Shallow ReLU networks `u(x) = Σ c_j max(w_j·x + b_j, 0) + c_0`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::{Serialize, SerializeSeq, Serializer};
use thiserror::Error;

use crate::linalg::{lu_solve, LinalgError, Matrix};
use crate::maps::{DomainBox, Point};
use crate::quadrature::{Line, QuadError, QuadRule};
use crate::transfer::{DampedProblem, FieldKind, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("network needs at least one neuron")]
    NoNeurons,
    #[error("input dimension must be 1 or 2, got {0}")]
    InputDim(usize),
    #[error("geometric ratio must lie in (0, 1), got {0}")]
    InvalidRatio(f64),
    #[error("flat parameter vector has length {got}, expected {expected}")]
    FlatLength { expected: usize, got: usize },
    #[error("parameters are not finite")]
    NonFinite,
    #[error("{0}")]
    Dimension(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Parameters of a single-hidden-layer ReLU network.
///
/// Flat ordering: inner weights (row-major, one row per neuron), inner
/// biases, outer weights, outer bias.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    input_dim: usize,
    pub inner_weights: Vec<f64>,
    pub inner_biases: Vec<f64>,
    pub outer_weights: Vec<f64>,
    pub outer_bias: f64,
}

impl Serialize for NetParams {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let flat = self.to_flat();
        let mut seq = s.serialize_seq(Some(flat.len()))?;
        for v in &flat {
            seq.serialize_element(v)?;
        }
        seq.end()
    }
}

impl NetParams {
    pub fn zeros(input_dim: usize, n_hidden: usize) -> Result<Self, NetworkError> {
        if n_hidden == 0 {
            return Err(NetworkError::NoNeurons);
        }
        if !(1..=2).contains(&input_dim) {
            return Err(NetworkError::InputDim(input_dim));
        }
        Ok(NetParams {
            input_dim,
            inner_weights: vec![0.0; n_hidden * input_dim],
            inner_biases: vec![0.0; n_hidden],
            outer_weights: vec![0.0; n_hidden],
            outer_bias: 0.0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn n_hidden(&self) -> usize {
        self.inner_biases.len()
    }

    pub fn n_params(&self) -> usize {
        self.n_hidden() * (self.input_dim + 2) + 1
    }

    /// Offset of the outer weights in the flat vector.
    pub fn outer_offset(&self) -> usize {
        self.n_hidden() * (self.input_dim + 1)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        v.extend_from_slice(&self.inner_weights);
        v.extend_from_slice(&self.inner_biases);
        v.extend_from_slice(&self.outer_weights);
        v.push(self.outer_bias);
        v
    }

    pub fn from_flat(input_dim: usize, n_hidden: usize, flat: &[f64]) -> Result<Self, NetworkError> {
        let mut p = Self::zeros(input_dim, n_hidden)?;
        p.set_flat(flat)?;
        Ok(p)
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<(), NetworkError> {
        if flat.len() != self.n_params() {
            return Err(NetworkError::FlatLength {
                expected: self.n_params(),
                got: flat.len(),
            });
        }
        let (n, d) = (self.n_hidden(), self.input_dim);
        self.inner_weights.copy_from_slice(&flat[..n * d]);
        self.inner_biases.copy_from_slice(&flat[n * d..n * (d + 1)]);
        self.outer_weights.copy_from_slice(&flat[n * (d + 1)..n * (d + 2)]);
        self.outer_bias = flat[n * (d + 2)];
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }

    /// Pre-activation `a_j = w_j·x + b_j`.
    #[inline]
    pub fn preactivation(&self, j: usize, x: &Point) -> f64 {
        let d = self.input_dim;
        let w = &self.inner_weights[j * d..(j + 1) * d];
        let mut a = self.inner_biases[j] + w[0] * x[0];
        if d == 2 {
            a += w[1] * x[1];
        }
        a
    }

    pub fn eval(&self, x: &Point) -> f64 {
        let mut s = self.outer_bias;
        for j in 0..self.n_hidden() {
            s += self.outer_weights[j] * self.preactivation(j, x).max(0.0);
        }
        s
    }

    /// `g += scale · ∂u(x)/∂θ` in flat ordering. The subgradient at a kink is 0.
    pub fn accumulate_grad(&self, x: &Point, scale: f64, g: &mut [f64]) {
        let (n, d) = (self.n_hidden(), self.input_dim);
        for j in 0..n {
            let a = self.preactivation(j, x);
            if a > 0.0 {
                let cj = scale * self.outer_weights[j];
                g[j * d] += cj * x[0];
                if d == 2 {
                    g[j * d + 1] += cj * x[1];
                }
                g[n * d + j] += cj;
                g[n * (d + 1) + j] += scale * a;
            }
        }
        g[n * (d + 2)] += scale;
    }

    pub fn grad_params(&self, x: &Point) -> Vec<f64> {
        let mut g = vec![0.0; self.n_params()];
        self.accumulate_grad(x, 1.0, &mut g);
        g
    }

    /// Distance in pre-activation from `x` to the nearest kink.
    pub fn min_abs_preactivation(&self, x: &Point) -> f64 {
        (0..self.n_hidden())
            .map(|j| self.preactivation(j, x).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Kink locations `-b_j / w_j` of a 1D network (neurons with `w_j = 0` skipped).
    pub fn kinks_1d(&self) -> Vec<f64> {
        (0..self.n_hidden())
            .filter(|&j| self.inner_weights[j * self.input_dim] != 0.0)
            .map(|j| -self.inner_biases[j] / self.inner_weights[j * self.input_dim])
            .collect()
    }

    /// Kink lines `w_j·x + b_j = 0` of a 2D network.
    pub fn kink_lines(&self) -> Vec<Line> {
        (0..self.n_hidden())
            .map(|j| {
                Line::new(
                    self.inner_weights[2 * j],
                    self.inner_weights[2 * j + 1],
                    self.inner_biases[j],
                )
            })
            .collect()
    }

    pub fn to_field(&self) -> ScalarField {
        let p = self.clone();
        ScalarField::new(FieldKind::Network, move |x| p.eval(x))
    }
}

fn with_kinks(kinks: &[f64]) -> Result<NetParams, NetworkError> {
    let mut p = NetParams::zeros(1, kinks.len())?;
    for (j, &t) in kinks.iter().enumerate() {
        p.inner_weights[j] = 1.0;
        p.inner_biases[j] = -t;
    }
    Ok(p)
}

/// Kinks at `lo + (hi - lo)·i/n`, `i = 0..n-1`; outer parameters zero.
pub fn init_uniform_breakpoints(n: usize, domain: &DomainBox) -> Result<NetParams, NetworkError> {
    if domain.dim() != 1 {
        return Err(NetworkError::Dimension("uniform breakpoints are 1D".into()));
    }
    let kinks: Vec<f64> = (0..n)
        .map(|i| domain.lo(0) + domain.width(0) * i as f64 / n as f64)
        .collect();
    with_kinks(&kinks)
}

/// Kinks at `{0, r^{n-1}, …, r², r}` (scaled to the domain), graded toward the
/// lower end; outer parameters zero.
pub fn init_geometric_breakpoints(
    n: usize,
    r: f64,
    domain: &DomainBox,
) -> Result<NetParams, NetworkError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(NetworkError::InvalidRatio(r));
    }
    if domain.dim() != 1 {
        return Err(NetworkError::Dimension("geometric breakpoints are 1D".into()));
    }
    if n == 0 {
        return Err(NetworkError::NoNeurons);
    }
    let mut kinks = vec![domain.lo(0)];
    for k in (1..n).rev() {
        kinks.push(domain.lo(0) + domain.width(0) * r.powi(k as i32));
    }
    with_kinks(&kinks)
}

/// Random 2D inner layer: directions uniform on the circle with magnitude
/// `n / diam(Ω)`, each kink line through a uniform random domain point.
/// Outer parameters zero.
pub fn init_random_2d(n: usize, domain: &DomainBox, seed: u64) -> Result<NetParams, NetworkError> {
    if domain.dim() != 2 {
        return Err(NetworkError::Dimension("random 2D init needs a 2D domain".into()));
    }
    let mut p = NetParams::zeros(2, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = n as f64 / domain.diameter();
    for j in 0..n {
        let angle = rng.gen_range(0.0..TAU);
        let (w0, w1) = (scale * angle.cos(), scale * angle.sin());
        let z0 = domain.lo(0) + domain.width(0) * rng.gen::<f64>();
        let z1 = domain.lo(1) + domain.width(1) * rng.gen::<f64>();
        p.inner_weights[2 * j] = w0;
        p.inner_weights[2 * j + 1] = w1;
        p.inner_biases[j] = -(w0 * z0 + w1 * z1);
    }
    Ok(p)
}

/// Rows of the linear map `(c, c_0) ↦ ((I - a P) u)(x_i)`.
pub fn outer_design(params: &NetParams, prob: &DampedProblem, rule: &QuadRule) -> Matrix {
    let n = params.n_hidden();
    let mut design = Matrix::zeros(rule.len(), n + 1);
    for (i, x) in rule.nodes().iter().enumerate() {
        for j in 0..n {
            design[(i, j)] = params.preactivation(j, x).max(0.0);
        }
        let mut const_col = 1.0;
        for (y, wt) in prob.map.pf_branches(x) {
            for j in 0..n {
                design[(i, j)] -= prob.alpha * wt * params.preactivation(j, &y).max(0.0);
            }
            const_col -= prob.alpha * wt;
        }
        design[(i, n)] = const_col;
    }
    design
}

/// Least-squares fit of the outer layer to `min Σ w_i (f0 - (I - aP) u)(x_i)²`
/// with the inner layer frozen, via ridge-regularized normal equations
/// (`λ = 1e-10 · trace / (n + 1)`).
pub fn fit_outer(
    params: &NetParams,
    prob: &DampedProblem,
    rule: &QuadRule,
) -> Result<NetParams, NetworkError> {
    let design = outer_design(params, prob, rule);
    let target = rule.values(&prob.f0)?;
    let k = design.cols();
    let mut normal = Matrix::zeros(k, k);
    let mut rhs = vec![0.0; k];
    for (i, w) in rule.weights().iter().enumerate() {
        let row = design.row(i);
        for a in 0..k {
            let wa = w * row[a];
            if wa == 0.0 {
                continue;
            }
            rhs[a] += wa * target[i];
            for b in 0..k {
                normal[(a, b)] += wa * row[b];
            }
        }
    }
    let lambda = 1e-10 * normal.trace() / k as f64;
    for a in 0..k {
        normal[(a, a)] += lambda.max(f64::MIN_POSITIVE);
    }
    let c = lu_solve(&normal, &rhs)?;
    let mut out = params.clone();
    out.outer_weights.copy_from_slice(&c[..k - 1]);
    out.outer_bias = c[k - 1];
    if !out.is_finite() {
        return Err(NetworkError::NonFinite);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapDescriptor;
    use proptest::prelude::*;

    #[test]
    fn constant_network() {
        let mut p = NetParams::zeros(1, 3).unwrap();
        p.outer_bias = 7.0;
        assert_eq!(p.eval(&[0.4, 0.0]), 7.0);
    }

    #[test]
    fn single_relu() {
        let p = NetParams::from_flat(1, 1, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(p.eval(&[-1.0, 0.0]), 0.0);
        assert_eq!(p.eval(&[2.0, 0.0]), 2.0);
    }

    #[test]
    fn reproduces_the_tent_map() {
        let p = NetParams::from_flat(1, 2, &[2.0, 2.0, 0.0, -1.0, 1.0, -2.0, 0.0]).unwrap();
        assert!((p.eval(&[0.75, 0.0]) - 0.5).abs() < 1e-15);
        assert!((p.eval(&[0.25, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dead_neuron_gradient() {
        let p = NetParams::from_flat(1, 1, &[1.0, -2.0, 3.0, 0.5]).unwrap();
        let g = p.grad_params(&[0.5, 0.0]);
        assert_eq!(g, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn uniform_and_geometric_kinks() {
        let p = init_uniform_breakpoints(4, &DomainBox::unit_interval()).unwrap();
        assert_eq!(p.kinks_1d(), vec![0.0, 0.25, 0.5, 0.75]);
        let g = init_geometric_breakpoints(3, 0.5, &DomainBox::unit_interval()).unwrap();
        assert_eq!(g.kinks_1d(), vec![0.0, 0.25, 0.5]);
        let g = init_geometric_breakpoints(32, 0.662, &DomainBox::unit_interval()).unwrap();
        let smallest = g.kinks_1d().into_iter().filter(|&t| t > 0.0).fold(1.0, f64::min);
        assert!((smallest / 0.662f64.powi(31) - 1.0).abs() < 1e-14);
        assert!(init_geometric_breakpoints(3, 1.0, &DomainBox::unit_interval()).is_err());
        assert!(init_uniform_breakpoints(0, &DomainBox::unit_interval()).is_err());
    }

    #[test]
    fn piecewise_affine_between_kinks() {
        let mut p = init_uniform_breakpoints(4, &DomainBox::unit_interval()).unwrap();
        p.outer_weights = vec![1.0, -3.0, 2.5, 0.7];
        let h = 1e-3;
        for x in [0.1, 0.4, 0.6, 0.9] {
            let d2 = p.eval(&[x - h, 0.0]) - 2.0 * p.eval(&[x, 0.0]) + p.eval(&[x + h, 0.0]);
            assert!(d2.abs() < 1e-12);
        }
    }

    #[test]
    fn random_2d_kinks_pass_through_domain() {
        let d = MapDescriptor::circle_boundary().domain;
        let p = init_random_2d(32, &d, 9).unwrap();
        let scale = 32.0 / d.diameter();
        for j in 0..32 {
            let w = [p.inner_weights[2 * j], p.inner_weights[2 * j + 1]];
            assert!(((w[0] * w[0] + w[1] * w[1]).sqrt() - scale).abs() < 1e-12);
        }
        assert_eq!(p, init_random_2d(32, &d, 9).unwrap());
    }

    #[test]
    fn fit_outer_recovers_span_member_at_small_alpha() {
        // With a -> 0 the fit reduces to weighted interpolation in the span.
        let mut truth = init_uniform_breakpoints(6, &DomainBox::unit_interval()).unwrap();
        truth.outer_weights = vec![0.3, -1.0, 2.0, 0.5, -0.25, 1.5];
        truth.outer_bias = 0.7;
        let t = truth.clone();
        let mut prob = DampedProblem::new(MapDescriptor::tent(), 0.5, ScalarField::analytic(move |x| t.eval(x))).unwrap();
        prob.alpha = 0.0;
        let rule = QuadRule::composite(&DomainBox::unit_interval(), &[truth.kinks_1d()], 4).unwrap();
        let start = init_uniform_breakpoints(6, &DomainBox::unit_interval()).unwrap();
        let fit = fit_outer(&start, &prob, &rule).unwrap();
        for i in 0..=100 {
            let x = [i as f64 / 100.0, 0.0];
            assert!((fit.eval(&x) - truth.eval(&x)).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn flat_round_trip(v in proptest::collection::vec(-5.0f64..5.0, 4 * 5 + 1)) {
            let p = NetParams::from_flat(2, 5, &v).unwrap();
            prop_assert_eq!(p.to_flat(), v);
        }

        #[test]
        fn outer_layer_is_linear(v in proptest::collection::vec(-2.0f64..2.0, 3 * 4 + 1), t in -3.0f64..3.0, x in 0.0f64..1.0) {
            let p = NetParams::from_flat(1, 4, &v).unwrap();
            let mut q = p.clone();
            for c in q.outer_weights.iter_mut() { *c *= t; }
            q.outer_bias *= t;
            let (a, b) = (q.eval(&[x, 0.0]), t * p.eval(&[x, 0.0]));
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}
