//! Perron-Frobenius and Koopman operators, the damped residual
//! `f0 - u + a P u`, the variational forms and the truncated power series.

mod cases;
mod field;
mod series;

use thiserror::Error;

use crate::maps::{MapDescriptor, MapError, MapKind, Point};
use crate::quadrature::{QuadError, QuadRule};

pub use cases::{
    circle_f0, manufactured, planar_f0_norm, standard_f0, Manufactured, ProblemCase,
};
pub use field::{FieldKind, ScalarField};
pub use series::{truncated_series, SeriesOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransferError {
    #[error("damping must satisfy 0 < alpha < 1, got {0}")]
    InvalidAlpha(f64),
    #[error("norm exponent must satisfy 1 < p < inf, got {0}")]
    InvalidExponent(f64),
    #[error("series with {n_terms} terms costs {cost} evaluations per point, above the cap {cap}")]
    Budget { n_terms: usize, cost: f64, cap: f64 },
    #[error("unknown problem case '{0}'")]
    UnknownCase(String),
    #[error("case {case} is defined for the {expected} map, not {got}")]
    IncompatibleCase {
        case: String,
        expected: MapKind,
        got: MapKind,
    },
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// `u - a P u = f0` on the domain of `map`.
#[derive(Debug, Clone)]
pub struct DampedProblem {
    pub map: MapDescriptor,
    pub alpha: f64,
    pub f0: ScalarField,
    /// Exponent of the `L^p` norm used by the strong-form loss.
    pub p: f64,
}

impl DampedProblem {
    pub fn new(map: MapDescriptor, alpha: f64, f0: ScalarField) -> Result<Self, TransferError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(TransferError::InvalidAlpha(alpha));
        }
        Ok(DampedProblem {
            map,
            alpha,
            f0,
            p: 2.0,
        })
    }

    pub fn with_exponent(mut self, p: f64) -> Result<Self, TransferError> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(TransferError::InvalidExponent(p));
        }
        self.p = p;
        Ok(self)
    }

    /// Builds a benchmark problem; also returns the exact solution when known.
    pub fn from_case(
        map: MapDescriptor,
        case: ProblemCase,
        alpha: f64,
    ) -> Result<(Self, Option<ScalarField>), TransferError> {
        if let Some(expected) = case.native_map() {
            if expected != map.kind {
                return Err(TransferError::IncompatibleCase {
                    case: case.to_string(),
                    expected,
                    got: map.kind,
                });
            }
        }
        let (f0, exact) = case.data(alpha)?;
        Ok((Self::new(map, alpha, f0)?, exact))
    }

    /// Same problem at another damping (the data `f0` is kept).
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, TransferError> {
        let mut p = Self::new(self.map, alpha, self.f0.clone())?;
        p.p = self.p;
        Ok(p)
    }

    /// Counts rule nodes where `f0 < 0`, logging a warning if any.
    pub fn negative_f0_nodes(&self, rule: &QuadRule) -> usize {
        let n = rule
            .nodes()
            .iter()
            .filter(|x| self.f0.eval(x) < 0.0)
            .count();
        if n > 0 {
            log::warn!("f0 is negative at {n} of {} quadrature nodes", rule.len());
        }
        n
    }

    /// `(P f)(x)` evaluated directly.
    #[inline]
    pub fn pf_at(&self, f: impl Fn(&Point) -> f64, x: &Point) -> f64 {
        pf_at(&self.map, f, x)
    }
}

#[inline]
fn pf_at(map: &MapDescriptor, f: impl Fn(&Point) -> f64, x: &Point) -> f64 {
    map.pf_branches(x).iter().map(|(y, w)| w * f(y)).sum()
}

/// Lazily evaluated `P f`: the two-branch formula for the tent map and
/// `f∘S⁻¹ |J_{S⁻¹}|` for the diffeomorphisms.
pub fn apply_pf(map: &MapDescriptor, f: &ScalarField) -> ScalarField {
    let (map, f) = (*map, f.clone());
    ScalarField::new(f.kind(), move |x| pf_at(&map, |y| f.eval(y), x))
}

/// `K v = v∘S`.
pub fn apply_koopman(map: &MapDescriptor, v: &ScalarField) -> ScalarField {
    let (map, v) = (*map, v.clone());
    ScalarField::new(v.kind(), move |x| v.eval(&map.forward_unchecked(x)))
}

/// `x ↦ f0(x) - u(x) + a (P u)(x)`.
pub fn residual(prob: &DampedProblem, u: &ScalarField) -> ScalarField {
    let (map, alpha, f0, u) = (prob.map, prob.alpha, prob.f0.clone(), u.clone());
    ScalarField::new(u.kind(), move |x| {
        f0.eval(x) - u.eval(x) + alpha * pf_at(&map, |y| u.eval(y), x)
    })
}

/// Which side of the duality `∫(P u) v = ∫ u (K v)` a form is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormPath {
    /// `∫ (u - a P u) v`.
    Pf,
    /// `∫ u (v - a K v)`; only needs the forward map.
    Koopman,
}

/// `b(u, v)` by quadrature.
pub fn bilinear_b(
    prob: &DampedProblem,
    u: &ScalarField,
    v: &ScalarField,
    rule: &QuadRule,
    path: FormPath,
) -> Result<f64, TransferError> {
    let (map, a) = (prob.map, prob.alpha);
    let val = match path {
        FormPath::Pf => rule.integrate(&|x: &Point| {
            (u.eval(x) - a * pf_at(&map, |y| u.eval(y), x)) * v.eval(x)
        })?,
        FormPath::Koopman => rule.integrate(&|x: &Point| {
            u.eval(x) * (v.eval(x) - a * v.eval(&map.forward_unchecked(x)))
        })?,
    };
    Ok(val)
}

/// `l(v) = ∫ f0 v`.
pub fn linear_l(prob: &DampedProblem, v: &ScalarField, rule: &QuadRule) -> Result<f64, TransferError> {
    Ok(rule.integrate(&|x: &Point| prob.f0.eval(x) * v.eval(x))?)
}
