//! Rules on which the RVPINNs integrands are integrated exactly, and the
//! supremum form of the RVPINNs loss.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{LossKind, LossSpec, TrainError};
use crate::galerkin::{galerkin_field, Basis};
use crate::maps::MapKind;
use crate::network::NetParams;
use crate::quadrature::{arrangement_rule, Line, QuadRule};
use crate::transfer::{bilinear_b, DampedProblem};

/// A composite rule whose panels align with every kink and jump of the
/// RVPINNs integrands (both the Perron-Frobenius and the Koopman form) for
/// this network and indicator basis, so that the piecewise-linear integrands
/// are integrated exactly.
///
/// Tent map: breaks at the network kinks `t`, their images `2t` and `2 - 2t`
/// under the inverse branches, cell edges `e`, their preimages `e/2`,
/// `1 - e/2`, and the fold `1/2`. Circle map: the line arrangement of the
/// network kinks, their pullbacks by `S⁻¹` on each side of the wrap, the wrap
/// lines themselves, the cell edges and the preimages of the cell edges.
pub fn exact_loss_rule(
    prob: &DampedProblem,
    params: &NetParams,
    basis: &Basis,
) -> Result<QuadRule, TrainError> {
    let part = basis.partition();
    match prob.map.kind {
        MapKind::Tent => {
            let mut breaks = vec![0.5];
            for t in params.kinks_1d() {
                breaks.extend([t, 2.0 * t, 2.0 - 2.0 * t]);
            }
            let mut edges = part.breaks(0);
            edges.extend([0.0, 1.0]);
            for e in edges {
                breaks.extend([e, 0.5 * e, 1.0 - 0.5 * e]);
            }
            Ok(QuadRule::composite(&prob.map.domain, &[breaks], 2)?)
        }
        MapKind::CircleBoundary => {
            let mut lines = params.kink_lines();
            // u(S⁻¹x) with S⁻¹(φ, ψ) = (φ - π + 2ψ - 2πk, ψ) on each wrap sheet.
            for l in params.kink_lines() {
                for k in [-1.0, 0.0, 1.0] {
                    lines.push(Line::new(l.a, 2.0 * l.a + l.b, l.c - l.a * (PI + TAU * k)));
                }
            }
            for k in [-1.0, 0.0, 1.0] {
                lines.push(Line::new(1.0, 2.0, -PI - TAU * k));
            }
            let mut phi_edges = part.breaks(0);
            phi_edges.extend([0.0, TAU]);
            for &e in &phi_edges {
                lines.push(Line::vertical(e));
                // S(x) hits the edge e: φ + π - 2ψ - 2πk = e.
                for k in [-1.0, 0.0, 1.0, 2.0] {
                    lines.push(Line::new(1.0, -2.0, PI - TAU * k - e));
                }
            }
            for e in part.breaks(1) {
                lines.push(Line::horizontal(e));
            }
            Ok(arrangement_rule(&prob.map.domain, &lines, 1, 2)?)
        }
        MapKind::StandardMap => Err(TrainError::Unsupported(
            "exact loss rules need a piecewise-affine map".into(),
        )),
    }
}

/// The supremum form of the RVPINNs loss evaluated at the Riesz supremizer
/// `g = Σ r_m g_m`, next to the `√Σ r_m²` form and random competitors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupCheck {
    pub loss: f64,
    /// `(l(g) - b(u, g)) / ‖g‖`, or `None` when `g = 0`.
    pub supremizer_ratio: Option<f64>,
    /// Largest ratio over the random probes.
    pub max_probe_ratio: f64,
}

pub fn sup_form_check(
    spec: &LossSpec,
    prob: &DampedProblem,
    params: &NetParams,
    probe_count: usize,
    seed: u64,
) -> Result<SupCheck, TrainError> {
    if spec.kind != LossKind::RvpinnsL2 {
        return Err(TrainError::InvalidSpec(
            "the supremum form belongs to the RVPINNs loss".into(),
        ));
    }
    let basis = spec.test_basis.as_ref().expect("RVPINNs spec carries a basis");
    let loss = spec.compile(prob)?;
    let r = loss.residuals(params);
    let value = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let u = params.to_field();
    let load_rule = spec.load_rule.as_ref().unwrap_or(&spec.rule);
    let ratio = |coeffs: &[f64]| -> Result<Option<f64>, TrainError> {
        let v = galerkin_field(basis, coeffs)?;
        let norm = spec.rule.l2_norm(&v)?;
        if norm == 0.0 {
            return Ok(None);
        }
        let l = load_rule.integrate(&|x: &crate::maps::Point| prob.f0.eval(x) * v.eval(x))?;
        let b = bilinear_b(prob, &u, &v, &spec.rule, spec.path)?;
        Ok(Some((l - b) / norm))
    };
    let supremizer_ratio = ratio(&r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_probe = f64::NEG_INFINITY;
    for _ in 0..probe_count {
        let a: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(q) = ratio(&a)? {
            max_probe = max_probe.max(q);
        }
    }
    Ok(SupCheck {
        loss: value,
        supremizer_ratio,
        max_probe_ratio: max_probe,
    })
}
