//! The benchmark dynamical systems: the tent map on `[0,1]`, the billiard
//! boundary map of the unit circle and the Chirikov standard map.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point of a one- or two-dimensional domain. 1D points use `p[0]` only.
pub type Point = [f64; 2];

/// Slack allowed when checking that a point lies in a domain.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Default chaos parameter of the standard map.
pub const DEFAULT_K: f64 = 2.4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("coordinate {axis} = {value} lies outside [{lo}, {hi}]")]
    OutOfDomain {
        axis: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("{op} is not supported for the {map} map")]
    Unsupported { op: &'static str, map: MapKind },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("unknown map id `{0}` (expected tent, circle_boundary or standard_map)")]
    UnknownMap(String),
}

/// Axis-aligned box `[lo, hi]` in one or two dimensions.
///
/// Periodic axes are half-open, `[lo, hi)`, with `hi` identified with `lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    periodic: [bool; 2],
}

impl DomainBox {
    pub fn new(lo: &[f64], hi: &[f64], periodic: &[bool]) -> Result<Self, MapError> {
        let dim = lo.len();
        if !(1..=2).contains(&dim) || hi.len() != dim || periodic.len() != dim {
            return Err(MapError::InvalidDomain(format!(
                "dimension must be 1 or 2 with matching bounds (got {}, {}, {})",
                lo.len(),
                hi.len(),
                periodic.len()
            )));
        }
        let mut b = DomainBox {
            dim,
            lo: [0.0; 2],
            hi: [0.0; 2],
            periodic: [false; 2],
        };
        for i in 0..dim {
            if !(lo[i] < hi[i]) || !lo[i].is_finite() || !hi[i].is_finite() {
                return Err(MapError::InvalidDomain(format!(
                    "axis {i}: need finite lo < hi, got [{}, {}]",
                    lo[i], hi[i]
                )));
            }
            b.lo[i] = lo[i];
            b.hi[i] = hi[i];
            b.periodic[i] = periodic[i];
        }
        Ok(b)
    }

    /// The interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self, MapError> {
        Self::new(&[lo], &[hi], &[false])
    }

    pub fn unit_interval() -> Self {
        Self::interval(0.0, 1.0).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.lo[axis]
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.hi[axis]
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|i| self.width(i)).product()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim).map(|i| self.width(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        (0..self.dim).all(|i| x[i] >= self.lo[i] - tol && x[i] <= self.hi[i] + tol)
    }

    pub fn check(&self, x: &Point) -> Result<(), MapError> {
        for i in 0..self.dim {
            if !(x[i] >= self.lo[i] - DOMAIN_TOL && x[i] <= self.hi[i] + DOMAIN_TOL) {
                return Err(MapError::OutOfDomain {
                    axis: i,
                    value: x[i],
                    lo: self.lo[i],
                    hi: self.hi[i],
                });
            }
        }
        Ok(())
    }

    /// Reduces periodic coordinates into `[lo, hi)`.
    pub fn wrap(&self, mut x: Point) -> Point {
        for i in 0..self.dim {
            if self.periodic[i] {
                x[i] = self.lo[i] + reduce_mod(x[i] - self.lo[i], self.width(i));
            }
        }
        x
    }

    /// Sup-norm distance with periodic axes measured on the circle.
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        (0..self.dim)
            .map(|i| {
                let d = (a[i] - b[i]).abs();
                if self.periodic[i] {
                    let l = self.width(i);
                    let d = reduce_mod(d, l);
                    d.min(l - d)
                } else {
                    d
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `x mod l` in `[0, l)`, computed as `x - floor(x / l) * l`.
pub fn reduce_mod(x: f64, l: f64) -> f64 {
    let r = x - (x / l).floor() * l;
    if r >= l || r < 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Tent,
    CircleBoundary,
    StandardMap,
}

impl MapKind {
    pub fn id(&self) -> &'static str {
        match self {
            MapKind::Tent => "tent",
            MapKind::CircleBoundary => "circle_boundary",
            MapKind::StandardMap => "standard_map",
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for MapKind {
    type Err = MapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tent" => Ok(MapKind::Tent),
            "circle_boundary" => Ok(MapKind::CircleBoundary),
            "standard_map" => Ok(MapKind::StandardMap),
            other => Err(MapError::UnknownMap(other.to_string())),
        }
    }
}

/// Preimages of a point, each paired with its Perron-Frobenius weight
/// (`|det J_{S^-1}|` times the branch factor).
pub type Branches = ArrayVec<(Point, f64), 2>;

/// A discrete dynamical system `S: Ω → Ω` together with its domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapDescriptor {
    pub kind: MapKind,
    pub domain: DomainBox,
    /// Chaos parameter; only read by the standard map.
    pub k_param: f64,
}

impl MapDescriptor {
    /// `S(x) = 2x` on `[0, 1/2)`, `2 - 2x` on `[1/2, 1]`.
    pub fn tent() -> Self {
        MapDescriptor {
            kind: MapKind::Tent,
            domain: DomainBox::unit_interval(),
            k_param: DEFAULT_K,
        }
    }

    /// `S(φ, ψ) = (φ + π - 2ψ mod 2π, ψ)` on `[0, 2π) × (-π/2, π/2)`.
    pub fn circle_boundary() -> Self {
        MapDescriptor {
            kind: MapKind::CircleBoundary,
            domain: DomainBox::new(&[0.0, -FRAC_PI_2], &[TAU, FRAC_PI_2], &[true, false]).unwrap(),
            k_param: DEFAULT_K,
        }
    }

    /// `S(θ, p) = (θ + p + K sin θ, p + K sin θ) mod 2π` on the torus `[0, 2π)²`.
    pub fn standard_map(k: f64) -> Self {
        MapDescriptor {
            kind: MapKind::StandardMap,
            domain: DomainBox::new(&[0.0, 0.0], &[TAU, TAU], &[true, true]).unwrap(),
            k_param: k,
        }
    }

    pub fn from_kind(kind: MapKind, k_param: Option<f64>) -> Self {
        match kind {
            MapKind::Tent => Self::tent(),
            MapKind::CircleBoundary => Self::circle_boundary(),
            MapKind::StandardMap => Self::standard_map(k_param.unwrap_or(DEFAULT_K)),
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Whether `S` is a diffeomorphism (so `P f = f∘S⁻¹ |J_{S⁻¹}|`).
    pub fn is_invertible(&self) -> bool {
        !matches!(self.kind, MapKind::Tent)
    }

    pub fn forward(&self, x: &Point) -> Result<Point, MapError> {
        self.domain.check(x)?;
        Ok(self.forward_unchecked(x))
    }

    /// All preimages of `x`. The tent map returns both branches `x/2` and `1 - x/2`.
    pub fn inverse(&self, x: &Point) -> Result<ArrayVec<Point, 2>, MapError> {
        self.domain.check(x)?;
        Ok(self.pf_branches(x).into_iter().map(|(p, _)| p).collect())
    }

    /// `|det J_{S⁻¹}(x)|` for the invertible maps.
    pub fn jac_det_inverse(&self, x: &Point) -> Result<f64, MapError> {
        match self.kind {
            MapKind::Tent => Err(MapError::Unsupported {
                op: "jac_det_inverse",
                map: self.kind,
            }),
            MapKind::CircleBoundary | MapKind::StandardMap => {
                self.domain.check(x)?;
                Ok(1.0)
            }
        }
    }

    /// Jacobian matrix of the forward map (rows = output coordinates).
    pub fn jacobian_forward(&self, x: &Point) -> Result<[[f64; 2]; 2], MapError> {
        self.domain.check(x)?;
        Ok(match self.kind {
            MapKind::Tent => {
                let s = if x[0] < 0.5 { 2.0 } else { -2.0 };
                [[s, 0.0], [0.0, 0.0]]
            }
            MapKind::CircleBoundary => [[1.0, -2.0], [0.0, 1.0]],
            MapKind::StandardMap => {
                let kc = self.k_param * x[0].cos();
                [[1.0 + kc, 1.0], [kc, 1.0]]
            }
        })
    }

    /// Forward map without the domain check; periodic axes are still wrapped.
    pub fn forward_unchecked(&self, x: &Point) -> Point {
        match self.kind {
            MapKind::Tent => {
                let y = if x[0] < 0.5 { 2.0 * x[0] } else { 2.0 - 2.0 * x[0] };
                [y, 0.0]
            }
            MapKind::CircleBoundary => self.domain.wrap([x[0] + PI - 2.0 * x[1], x[1]]),
            MapKind::StandardMap => {
                let kick = self.k_param * x[0].sin();
                self.domain.wrap([x[0] + x[1] + kick, x[1] + kick])
            }
        }
    }

    /// Preimages with Perron-Frobenius weights, so that
    /// `(P f)(x) = Σ weight · f(preimage)`.
    pub fn pf_branches(&self, x: &Point) -> Branches {
        let mut out = Branches::new();
        match self.kind {
            MapKind::Tent => {
                out.push(([0.5 * x[0], 0.0], 0.5));
                out.push(([1.0 - 0.5 * x[0], 0.0], 0.5));
            }
            MapKind::CircleBoundary => {
                out.push((self.domain.wrap([x[0] - PI + 2.0 * x[1], x[1]]), 1.0));
            }
            MapKind::StandardMap => {
                let theta = x[0] - x[1];
                let p = x[1] - self.k_param * theta.sin();
                out.push((self.domain.wrap([theta, p]), 1.0));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(map: &MapDescriptor, rng: &mut impl Rng) -> Point {
        let d = &map.domain;
        let mut p = [0.0; 2];
        for (i, c) in p.iter_mut().enumerate().take(d.dim()) {
            *c = rng.gen_range(d.lo(i)..d.hi(i));
        }
        p
    }

    #[test]
    fn tent_examples() {
        let t = MapDescriptor::tent();
        assert_eq!(t.forward(&[0.25, 0.0]).unwrap()[0], 0.5);
        let pre = t.inverse(&[0.5, 0.0]).unwrap();
        assert_eq!(pre[0][0], 0.25);
        assert_eq!(pre[1][0], 0.75);
        for p in &pre {
            assert_eq!(t.forward(p).unwrap()[0], 0.5);
        }
        assert!(matches!(
            t.jac_det_inverse(&[0.3, 0.0]),
            Err(MapError::Unsupported { .. })
        ));
    }

    #[test]
    fn standard_map_fixed_point() {
        let s = MapDescriptor::standard_map(2.4);
        assert_eq!(s.forward(&[0.0, 0.0]).unwrap(), [0.0, 0.0]);
        let inv = s.inverse(&[0.0, 0.0]).unwrap();
        assert_eq!(inv.len(), 1);
        assert_eq!(inv[0], [0.0, 0.0]);
        assert_eq!(s.jac_det_inverse(&[1.0, 2.0]).unwrap(), 1.0);
    }

    #[test]
    fn circle_boundary_forward() {
        let c = MapDescriptor::circle_boundary();
        let y = c.forward(&[0.0, PI / 4.0]).unwrap();
        // 0 + π - π/2
        assert!((y[0] - PI / 2.0).abs() < 1e-15);
        assert_eq!(y[1], PI / 4.0);
        // 0 + π + π/2
        let y = c.forward(&[0.0, -PI / 4.0]).unwrap();
        assert!((y[0] - 1.5 * PI).abs() < 1e-15);
        assert_eq!(c.jac_det_inverse(&[1.0, 0.3]).unwrap(), 1.0);
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let t = MapDescriptor::tent();
        assert!(t.forward(&[1.5, 0.0]).is_err());
        assert!(t.forward(&[1.0 + 1e-13, 0.0]).is_ok());
        let c = MapDescriptor::circle_boundary();
        assert!(matches!(
            c.forward(&[1.0, 2.0]),
            Err(MapError::OutOfDomain { axis: 1, .. })
        ));
        assert!(c.forward(&[TAU, 0.0]).is_ok());
    }

    #[test]
    fn periodic_reduction_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for map in [
            MapDescriptor::tent(),
            MapDescriptor::circle_boundary(),
            MapDescriptor::standard_map(2.4),
        ] {
            let d = map.domain;
            for _ in 0..1000 {
                let x = random_point(&map, &mut rng);
                let y = map.forward(&x).unwrap();
                assert!(d.contains(&y, 0.0), "{map:?} {x:?} -> {y:?}");
                for i in 0..d.dim() {
                    if d.is_periodic(i) {
                        assert!(y[i] >= d.lo(i) && y[i] < d.hi(i));
                    }
                }
                let pre = map.inverse(&y).unwrap();
                for p in &pre {
                    for i in 0..d.dim() {
                        if d.is_periodic(i) {
                            assert!(p[i] >= d.lo(i) && p[i] < d.hi(i));
                        }
                    }
                }
                if map.is_invertible() {
                    assert!(d.distance(&pre[0], &x) <= 1e-12, "{map:?} {x:?}");
                    let z = map.forward(&map.inverse(&x).unwrap()[0]).unwrap();
                    assert!(d.distance(&z, &x) <= 1e-12);
                } else {
                    assert!(pre.iter().any(|p| (p[0] - x[0]).abs() <= 1e-12));
                }
            }
        }
    }

    #[test]
    fn standard_map_area_preserving() {
        let s = MapDescriptor::standard_map(2.4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = random_point(&s, &mut rng);
            let j = s.jacobian_forward(&x).unwrap();
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            assert!((det - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reduce_mod_stays_half_open() {
        assert_eq!(reduce_mod(-1e-300, TAU), 0.0);
        assert_eq!(reduce_mod(TAU, TAU), 0.0);
        assert!((reduce_mod(-1.0, TAU) - (TAU - 1.0)).abs() < 1e-15);
        assert!(reduce_mod(-1e-17, 1.0) < 1.0);
    }

    #[test]
    fn parses_ids() {
        assert_eq!("standard_map".parse::<MapKind>().unwrap(), MapKind::StandardMap);
        assert!("henon".parse::<MapKind>().is_err());
    }
}
