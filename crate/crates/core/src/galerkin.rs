//! Fixed-grid Galerkin discretization: partitions, indicator and hat bases,
//! assembly of `A c = b`, Ulam transition matrices and the dense solve.

use arrayvec::ArrayVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{lu_solve, norm_inf, LinalgError, Matrix};
use crate::maps::{DomainBox, MapDescriptor, MapKind, Point};
use crate::quadrature::{QuadError, QuadRule};
use crate::transfer::{DampedProblem, FieldKind, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GalerkinError {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("Monte-Carlo Ulam sampling needs at least 100 samples per cell, got {0}")]
    TooFewSamples(usize),
    #[error("{0}")]
    Unsupported(String),
    #[error("expected {expected} coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },
    #[error("solve residual {residual:e} exceeds {bound:e}")]
    Residual { residual: f64, bound: f64 },
    #[error("assembled system has non-finite entries")]
    NonFinite,
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Equal-size cells `ω_1..ω_M` tiling a domain box. Cells are numbered with
/// the first axis varying slowest: `m = i_0 · n_1 + i_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    domain: DomainBox,
    cells_per_dim: Vec<usize>,
}

impl Partition {
    pub fn new(domain: DomainBox, cells_per_dim: &[usize]) -> Result<Self, GalerkinError> {
        if cells_per_dim.len() != domain.dim() {
            return Err(GalerkinError::InvalidPartition(format!(
                "{} cell counts for a {}-dimensional domain",
                cells_per_dim.len(),
                domain.dim()
            )));
        }
        if cells_per_dim.contains(&0) {
            return Err(GalerkinError::InvalidPartition(
                "every axis needs at least one cell".into(),
            ));
        }
        Ok(Partition {
            domain,
            cells_per_dim: cells_per_dim.to_vec(),
        })
    }

    /// The same number of cells on every axis.
    pub fn uniform(domain: DomainBox, cells: usize) -> Result<Self, GalerkinError> {
        let c = vec![cells; domain.dim()];
        Self::new(domain, &c)
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn cells_per_dim(&self) -> &[usize] {
        &self.cells_per_dim
    }

    pub fn len(&self) -> usize {
        self.cells_per_dim.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.domain.volume() / self.len() as f64
    }

    fn axis_index(&self, axis: usize, t: f64) -> usize {
        let c = self.cells_per_dim[axis];
        let s = (t - self.domain.lo(axis)) / self.domain.width(axis) * c as f64;
        if s <= 0.0 {
            0
        } else {
            (s.floor() as usize).min(c - 1)
        }
    }

    /// Cell containing `x`; cells are half-open except at the upper boundary.
    pub fn cell_of(&self, x: &Point) -> usize {
        match self.domain.dim() {
            1 => self.axis_index(0, x[0]),
            _ => self.axis_index(0, x[0]) * self.cells_per_dim[1] + self.axis_index(1, x[1]),
        }
    }

    pub fn cell_bounds(&self, m: usize) -> (Point, Point) {
        let idx = match self.domain.dim() {
            1 => [m, 0],
            _ => [m / self.cells_per_dim[1], m % self.cells_per_dim[1]],
        };
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for axis in 0..self.domain.dim() {
            let h = self.domain.width(axis) / self.cells_per_dim[axis] as f64;
            lo[axis] = self.domain.lo(axis) + h * idx[axis] as f64;
            hi[axis] = if idx[axis] + 1 == self.cells_per_dim[axis] {
                self.domain.hi(axis)
            } else {
                self.domain.lo(axis) + h * (idx[axis] + 1) as f64
            };
        }
        (lo, hi)
    }

    /// Interior cell edges along `axis`.
    pub fn breaks(&self, axis: usize) -> Vec<f64> {
        let c = self.cells_per_dim[axis];
        (1..c)
            .map(|k| self.domain.lo(axis) + self.domain.width(axis) * k as f64 / c as f64)
            .collect()
    }

    /// Composite Gauss rule with `n_per_panel` points per axis in every cell.
    pub fn aligned_rule(&self, n_per_panel: usize) -> Result<QuadRule, QuadError> {
        QuadRule::cell_aligned(&self.domain, &self.cells_per_dim, n_per_panel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// `g_m = 1_{ω_m} / √μ(ω_m)`.
    NormalizedIndicator,
    /// Nodal hats on `n` equal subintervals (`n + 1` functions).
    HatFunctions1D,
}

/// Nonzero basis values at a point: `(index, value)`.
pub type Support = ArrayVec<(usize, f64), 2>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    kind: BasisKind,
    partition: Partition,
}

impl Basis {
    pub fn indicator(partition: Partition) -> Self {
        Basis {
            kind: BasisKind::NormalizedIndicator,
            partition,
        }
    }

    /// Hats on `n` equal subintervals of a 1D domain.
    pub fn hat(domain: DomainBox, n: usize) -> Result<Self, GalerkinError> {
        if domain.dim() != 1 {
            return Err(GalerkinError::Unsupported(
                "hat functions are one-dimensional".into(),
            ));
        }
        Ok(Basis {
            kind: BasisKind::HatFunctions1D,
            partition: Partition::new(domain, &[n])?,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn len(&self) -> usize {
        match self.kind {
            BasisKind::NormalizedIndicator => self.partition.len(),
            BasisKind::HatFunctions1D => self.partition.len() + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Hat nodes `x_0 < … < x_n` (hat basis only).
    pub fn nodes(&self) -> Vec<f64> {
        let d = self.partition.domain();
        let n = self.partition.len();
        (0..=n)
            .map(|i| d.lo(0) + d.width(0) * i as f64 / n as f64)
            .collect()
    }

    pub fn support(&self, x: &Point) -> Support {
        let mut out = Support::new();
        match self.kind {
            BasisKind::NormalizedIndicator => {
                out.push((
                    self.partition.cell_of(x),
                    1.0 / self.partition.cell_volume().sqrt(),
                ));
            }
            BasisKind::HatFunctions1D => {
                let d = self.partition.domain();
                let n = self.partition.len();
                let s = ((x[0] - d.lo(0)) / d.width(0) * n as f64).clamp(0.0, n as f64);
                let j = (s.floor() as usize).min(n - 1);
                let t = s - j as f64;
                out.push((j, 1.0 - t));
                out.push((j + 1, t));
            }
        }
        out
    }

    pub fn eval(&self, i: usize, x: &Point) -> f64 {
        self.support(x)
            .iter()
            .find(|(j, _)| *j == i)
            .map_or(0.0, |(_, v)| *v)
    }

    pub fn functions(&self) -> Vec<ScalarField> {
        (0..self.len())
            .map(|i| {
                let b = self.clone();
                ScalarField::new(FieldKind::Galerkin, move |x| b.eval(i, x))
            })
            .collect()
    }

    /// `G_ij = ∫ g_i g_j`.
    pub fn gram(&self, rule: &QuadRule) -> Matrix {
        let mut g = Matrix::zeros(self.len(), self.len());
        for (x, w) in rule.nodes().iter().zip(rule.weights()) {
            let s = self.support(x);
            for &(i, a) in &s {
                for &(j, b) in &s {
                    g[(i, j)] += w * a * b;
                }
            }
        }
        g
    }

    /// `∫ f g_m` for every basis function.
    pub fn moments(&self, f: &ScalarField, rule: &QuadRule) -> Result<Vec<f64>, QuadError> {
        let fv = rule.values(f)?;
        let mut out = vec![0.0; self.len()];
        for ((x, w), v) in rule.nodes().iter().zip(rule.weights()).zip(fv) {
            for (i, g) in self.support(x) {
                out[i] += w * v * g;
            }
        }
        Ok(out)
    }
}

/// `A c = b` with `a_mk = b(g_k, g_m)`, `b_m = l(g_m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalerkinSystem {
    pub matrix: Matrix,
    pub rhs: Vec<f64>,
}

/// Assembles the Galerkin system by quadrature. Hat bases use the
/// Perron-Frobenius form `∫(g_k - a P g_k) g_m`; indicator bases use the
/// Koopman form `∫ g_k (g_m - a g_m∘S)`, which only evaluates indicators at
/// forward images.
pub fn assemble(
    prob: &DampedProblem,
    basis: &Basis,
    rule: &QuadRule,
) -> Result<GalerkinSystem, GalerkinError> {
    warn_if_singular(prob, rule);
    let alpha = prob.alpha;
    let map = prob.map;
    // (row, col, value) triples per node, gathered in node order.
    let contributions: Vec<Vec<(usize, usize, f64)>> = rule
        .nodes()
        .par_iter()
        .zip(rule.weights().par_iter())
        .map(|(x, &w)| {
            let sx = basis.support(x);
            let mut out = Vec::with_capacity(8);
            match basis.kind {
                BasisKind::HatFunctions1D => {
                    for &(m, gm) in &sx {
                        for &(k, gk) in &sx {
                            out.push((m, k, w * gm * gk));
                        }
                        for (y, pw) in map.pf_branches(x) {
                            for (k, gk) in basis.support(&y) {
                                out.push((m, k, -alpha * w * gm * pw * gk));
                            }
                        }
                    }
                }
                BasisKind::NormalizedIndicator => {
                    let sy = basis.support(&map.forward_unchecked(x));
                    for &(k, gk) in &sx {
                        for &(m, gm) in &sx {
                            out.push((m, k, w * gk * gm));
                        }
                        for &(m, gm) in &sy {
                            out.push((m, k, -alpha * w * gk * gm));
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut matrix = Matrix::zeros(basis.len(), basis.len());
    for node in contributions {
        for (m, k, v) in node {
            matrix[(m, k)] += v;
        }
    }
    let rhs = basis.moments(&prob.f0, rule)?;
    finish(matrix, rhs)
}

/// Indicator-basis system from a precomputed Ulam matrix:
/// `a_mk = δ_mk - a √(μ_k/μ_m) p_mk`, with the load vector by quadrature.
pub fn assemble_from_ulam(
    prob: &DampedProblem,
    basis: &Basis,
    ulam: &Matrix,
    rule: &QuadRule,
) -> Result<GalerkinSystem, GalerkinError> {
    if basis.kind != BasisKind::NormalizedIndicator {
        return Err(GalerkinError::Unsupported(
            "Ulam assembly needs an indicator basis".into(),
        ));
    }
    let n = basis.len();
    if ulam.rows() != n || ulam.cols() != n {
        return Err(GalerkinError::Linalg(LinalgError::Dimension(format!(
            "Ulam matrix is {}x{}, basis has {n} functions",
            ulam.rows(),
            ulam.cols()
        ))));
    }
    // Equal cell volumes make the scaling factor 1.
    let matrix = Matrix::from_fn(n, n, |m, k| {
        let d = if m == k { 1.0 } else { 0.0 };
        d - prob.alpha * ulam[(m, k)]
    });
    let rhs = basis.moments(&prob.f0, rule)?;
    finish(matrix, rhs)
}

fn finish(matrix: Matrix, rhs: Vec<f64>) -> Result<GalerkinSystem, GalerkinError> {
    if !matrix.is_finite() || rhs.iter().any(|v| !v.is_finite()) {
        return Err(GalerkinError::NonFinite);
    }
    Ok(GalerkinSystem { matrix, rhs })
}

fn warn_if_singular(prob: &DampedProblem, rule: &QuadRule) {
    let d = prob.map.domain;
    let mean = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(x, w)| w * prob.f0.eval(x).abs())
        .sum::<f64>()
        / d.volume();
    let mut probe = [0.0; 2];
    for axis in 0..d.dim() {
        probe[axis] = d.lo(axis) + 1e-12 * d.width(axis);
    }
    let v = prob.f0.eval(&probe).abs();
    if !v.is_finite() || v > 1e3 * mean.max(1e-300) {
        log::warn!("f0 appears unbounded near the domain corner; quadrature error may dominate");
    }
}

/// How Ulam transition probabilities are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UlamSampler {
    /// Exact preimage-interval arithmetic (tent map only).
    Exact,
    /// `n_samples` uniform points per cell, one seeded stream per cell.
    MonteCarlo { n_samples: usize, seed: u64 },
}

/// `p_mk = μ(S⁻¹(ω_m) ∩ ω_k) / μ(ω_k)`; columns are probability vectors.
pub fn ulam_matrix(
    map: &MapDescriptor,
    partition: &Partition,
    sampler: UlamSampler,
) -> Result<Matrix, GalerkinError> {
    let n = partition.len();
    match sampler {
        UlamSampler::Exact => {
            if map.kind != MapKind::Tent {
                return Err(GalerkinError::Unsupported(format!(
                    "exact Ulam entries are only implemented for the tent map, not {}",
                    map.kind
                )));
            }
            Ok(Matrix::from_fn(n, n, |m, k| {
                let (c, d) = (partition.cell_bounds(m).0[0], partition.cell_bounds(m).1[0]);
                let (a, b) = (partition.cell_bounds(k).0[0], partition.cell_bounds(k).1[0]);
                // S⁻¹([c, d)) = [c/2, d/2) ∪ (1 - d/2, 1 - c/2]
                let overlap = |lo: f64, hi: f64| (hi.min(b) - lo.max(a)).max(0.0);
                (overlap(0.5 * c, 0.5 * d) + overlap(1.0 - 0.5 * d, 1.0 - 0.5 * c)) / (b - a)
            }))
        }
        UlamSampler::MonteCarlo { n_samples, seed } => {
            if n_samples < 100 {
                return Err(GalerkinError::TooFewSamples(n_samples));
            }
            let columns: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k as u64);
                    let (lo, hi) = partition.cell_bounds(k);
                    let dim = partition.domain().dim();
                    let mut counts = vec![0usize; n];
                    for _ in 0..n_samples {
                        let mut x = [0.0; 2];
                        for axis in 0..dim {
                            x[axis] = lo[axis] + (hi[axis] - lo[axis]) * rng.gen::<f64>();
                        }
                        counts[partition.cell_of(&map.forward_unchecked(&x))] += 1;
                    }
                    counts
                        .into_iter()
                        .map(|c| c as f64 / n_samples as f64)
                        .collect()
                })
                .collect();
            Ok(Matrix::from_fn(n, n, |m, k| columns[k][m]))
        }
    }
}

/// Dense LU solve with a residual check `‖Ac - b‖∞ ≤ 1e-10 ‖b‖∞`.
pub fn solve(sys: &GalerkinSystem) -> Result<Vec<f64>, GalerkinError> {
    let c = lu_solve(&sys.matrix, &sys.rhs)?;
    let ac = sys.matrix.mul_vec(&c);
    let r: Vec<f64> = ac.iter().zip(&sys.rhs).map(|(p, q)| p - q).collect();
    let residual = norm_inf(&r);
    let bound = 1e-10 * norm_inf(&sys.rhs);
    if residual > bound && residual > f64::MIN_POSITIVE {
        return Err(GalerkinError::Residual { residual, bound });
    }
    Ok(c)
}

/// `u_M = Σ c_k g_k`.
pub fn galerkin_field(basis: &Basis, coeffs: &[f64]) -> Result<ScalarField, GalerkinError> {
    if coeffs.len() != basis.len() {
        return Err(GalerkinError::CoefficientCount {
            expected: basis.len(),
            got: coeffs.len(),
        });
    }
    let (b, c) = (basis.clone(), coeffs.to_vec());
    Ok(ScalarField::new(FieldKind::Galerkin, move |x| {
        b.support(x).iter().map(|(i, g)| c[*i] * g).sum()
    }))
}

/// Coefficients of the `L²` projection of `f` onto the basis span.
pub fn l2_projection(
    basis: &Basis,
    f: &ScalarField,
    rule: &QuadRule,
) -> Result<Vec<f64>, GalerkinError> {
    let g = basis.gram(rule);
    let m = basis.moments(f, rule)?;
    Ok(lu_solve(&g, &m)?)
}

/// Nodal interpolation coefficients `f(x_i)` (hat basis only).
pub fn nodal_interpolant(basis: &Basis, f: &ScalarField) -> Result<Vec<f64>, GalerkinError> {
    if basis.kind != BasisKind::HatFunctions1D {
        return Err(GalerkinError::Unsupported(
            "nodal interpolation needs a hat basis".into(),
        ));
    }
    Ok(basis.nodes().iter().map(|&x| f.eval(&[x, 0.0])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::{manufactured, Manufactured};

    fn tent_indicator(m: usize) -> Basis {
        Basis::indicator(Partition::uniform(DomainBox::unit_interval(), m).unwrap())
    }

    #[test]
    fn indicator_gram_is_identity() {
        let b = Basis::indicator(Partition::uniform(MapDescriptor::standard_map(2.4).domain, 4).unwrap());
        let g = b.gram(&b.partition().aligned_rule(2).unwrap());
        let eye = Matrix::identity(16);
        for i in 0..16 {
            for j in 0..16 {
                assert!((g[(i, j)] - eye[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hats_partition_unity() {
        let b = Basis::hat(DomainBox::unit_interval(), 7).unwrap();
        for i in 0..=50 {
            let x = [i as f64 / 50.0, 0.0];
            let s: f64 = (0..b.len()).map(|j| b.eval(j, &x)).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn alpha_zero_gives_gram() {
        // a = 0 is outside the problem class, so build the system by hand.
        let basis = tent_indicator(4);
        let rule = basis.partition().aligned_rule(3).unwrap();
        let mut prob = DampedProblem::new(MapDescriptor::tent(), 0.5, ScalarField::constant(1.0)).unwrap();
        prob.alpha = 0.0;
        let sys = assemble(&prob, &basis, &rule).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((sys.matrix[(i, j)] - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn two_cell_tent_system() {
        let basis = tent_indicator(2);
        let rule = basis.partition().aligned_rule(4).unwrap();
        let prob = DampedProblem::new(MapDescriptor::tent(), 0.5, ScalarField::constant(1.0)).unwrap();
        let sys = assemble(&prob, &basis, &rule).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 0.75 } else { -0.25 };
                assert!((sys.matrix[(i, j)] - e).abs() < 1e-14);
            }
        }
        let c = solve(&sys).unwrap();
        for ci in &c {
            assert!((ci - 2f64.sqrt()).abs() < 1e-13);
        }
        let u = galerkin_field(&basis, &c).unwrap();
        assert!((u.eval(&[0.3, 0.0]) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn exact_ulam_two_and_four_cells() {
        let t = MapDescriptor::tent();
        let p2 = ulam_matrix(&t, &Partition::uniform(DomainBox::unit_interval(), 2).unwrap(), UlamSampler::Exact).unwrap();
        assert!(p2.as_slice().iter().all(|&v| (v - 0.5).abs() < 1e-15));
        let part = Partition::uniform(DomainBox::unit_interval(), 4).unwrap();
        let exact = ulam_matrix(&t, &part, UlamSampler::Exact).unwrap();
        let mc = ulam_matrix(&t, &part, UlamSampler::MonteCarlo { n_samples: 100_000, seed: 42 }).unwrap();
        for k in 0..4 {
            let s: f64 = (0..4).map(|m| exact[(m, k)]).sum();
            assert!((s - 1.0).abs() < 1e-12);
            for m in 0..4 {
                assert!((exact[(m, k)] - mc[(m, k)]).abs() < 0.01);
            }
        }
    }

    #[test]
    fn monte_carlo_rejects_small_samples() {
        let part = Partition::uniform(DomainBox::unit_interval(), 4).unwrap();
        assert!(matches!(
            ulam_matrix(&MapDescriptor::tent(), &part, UlamSampler::MonteCarlo { n_samples: 99, seed: 1 }),
            Err(GalerkinError::TooFewSamples(99))
        ));
        assert!(ulam_matrix(
            &MapDescriptor::standard_map(2.4),
            &Partition::uniform(MapDescriptor::standard_map(2.4).domain, 4).unwrap(),
            UlamSampler::Exact
        )
        .is_err());
    }

    #[test]
    fn field_reproduces_linear_and_steps() {
        let hat = Basis::hat(DomainBox::unit_interval(), 5).unwrap();
        let id = ScalarField::analytic(|x| x[0]);
        let u = galerkin_field(&hat, &nodal_interpolant(&hat, &id).unwrap()).unwrap();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((u.eval(&[x, 0.0]) - x).abs() < 1e-14);
        }
        let ind = tent_indicator(4);
        let u = galerkin_field(&ind, &[2.0, 4.0, 6.0, 8.0]).unwrap();
        assert_eq!(u.eval(&[0.1, 0.0]), 4.0);
        assert_eq!(u.eval(&[0.9, 0.0]), 16.0);
        let zero = galerkin_field(&ind, &[0.0; 4]).unwrap();
        assert_eq!(zero.eval(&[0.5, 0.0]), 0.0);
        assert!(galerkin_field(&ind, &[1.0]).is_err());
    }

    #[test]
    fn hat_load_vector_is_accurate() {
        let (_, f0) = manufactured(Manufactured::SmoothExp, 0.5).unwrap();
        let prob = DampedProblem::new(MapDescriptor::tent(), 0.5, f0.clone()).unwrap();
        let basis = Basis::hat(DomainBox::unit_interval(), 4).unwrap();
        let rule = basis.partition().aligned_rule(20).unwrap();
        let sys = assemble(&prob, &basis, &rule).unwrap();
        let ai = crate::quadrature::AdaptiveIntegrator::new(1e-12);
        for m in 0..basis.len() {
            let g = basis.functions()[m].clone();
            let r = ai
                .integrate(&DomainBox::unit_interval(), &|x: &Point| f0.eval(x) * g.eval(x))
                .unwrap();
            assert!((sys.rhs[m] - r.value).abs() < 1e-8);
        }
    }
}
