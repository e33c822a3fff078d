use std::fmt;
use std::sync::Arc;

use crate::maps::Point;
use crate::quadrature::Integrand;

/// Where a field came from; informational only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Analytic,
    Network,
    Galerkin,
    Series,
}

/// A deterministic real function on a domain, shared cheaply by `Arc`.
#[derive(Clone)]
pub struct ScalarField {
    f: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
    kind: FieldKind,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("kind", &self.kind).finish()
    }
}

impl ScalarField {
    pub fn new<F>(kind: FieldKind, f: F) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        ScalarField {
            f: Arc::new(f),
            kind,
        }
    }

    pub fn analytic<F>(f: F) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        Self::new(FieldKind::Analytic, f)
    }

    pub fn constant(c: f64) -> Self {
        Self::analytic(move |_| c)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    #[inline]
    pub fn eval(&self, x: &Point) -> f64 {
        (self.f)(x)
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    /// `self - other`, keeping the kind of `self`.
    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        ScalarField::new(self.kind, move |x| a.eval(x) - b.eval(x))
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        ScalarField::new(self.kind, move |x| a.eval(x) + b.eval(x))
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        ScalarField::new(self.kind, move |x| a.eval(x) * b.eval(x))
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        let a = self.clone();
        ScalarField::new(self.kind, move |x| s * a.eval(x))
    }
}

impl Integrand for ScalarField {
    fn value(&self, x: &Point) -> f64 {
        self.eval(x)
    }
}
