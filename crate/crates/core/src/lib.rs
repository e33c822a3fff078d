//! Solvers for the damped power series `u = f0 + a P f0 + a^2 P^2 f0 + ...` of
//! Perron-Frobenius (transfer) operators of discrete dynamical systems.
//!
//! The series is the unique solution of `u - a P u = f0` for `0 < a < 1`
//! whenever `P` is non-expansive. Four routes to it live here:
//!
//! * [`transfer::truncated_series`]: the lazily evaluated partial sum, used as an oracle.
//! * [`galerkin`]: fixed-grid Galerkin projection (hat functions or Ulam's
//!   normalized cell indicators).
//! * [`training`] with [`training::LossKind::PinnsLp`]: strong-form residual
//!   minimization over a shallow ReLU network.
//! * [`training`] with [`training::LossKind::RvpinnsL2`]: discrete dual norm of the
//!   variational residual against an orthonormal test space.
//!
//! Points are `[f64; 2]`; one-dimensional problems ignore the second coordinate.

// `!(x > 0.0)` is deliberate: NaN must fail every validity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Loops over axes index several arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod galerkin;
pub mod linalg;
pub mod maps;
pub mod network;
pub mod quadrature;
pub mod training;
pub mod transfer;

pub use maps::{DomainBox, MapDescriptor, MapKind, Point};
pub use network::NetParams;
pub use quadrature::{AdaptiveIntegrator, QuadRule};
pub use transfer::{DampedProblem, ScalarField};
