use std::sync::Arc;

use super::{DampedProblem, FieldKind, ScalarField, TransferError};
use crate::maps::{MapKind, Point};

/// Evaluation limits for [`truncated_series`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Largest `N` expanded branch by branch for the tent map (`2^{N+1}`
    /// evaluations of `f0` per point).
    pub direct_max_terms: usize,
    /// Grid size for the tent map when `N > direct_max_terms`.
    pub grid_points: usize,
    /// Upper bound on `f0` evaluations per point.
    pub max_cost_per_point: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            direct_max_terms: 25,
            grid_points: 10_000,
            max_cost_per_point: 1e8,
        }
    }
}

/// `Σ_{k=0}^{N} a^k (P^k f0)(x)`, evaluated lazily.
///
/// For the diffeomorphisms `P^k f0 = f0∘S^{-k}`, so each point costs `N`
/// inverse-map steps. For the tent map the `2^k` preimages of level `k` are
/// expanded directly up to `direct_max_terms`; beyond that the series is
/// summed on a uniform midpoint grid with linear interpolation.
pub fn truncated_series(
    prob: &DampedProblem,
    n_terms: usize,
    opts: &SeriesOptions,
) -> Result<ScalarField, TransferError> {
    let (map, alpha, f0) = (prob.map, prob.alpha, prob.f0.clone());
    match map.kind {
        MapKind::Tent if n_terms <= opts.direct_max_terms => {
            let cost = 2f64.powi(n_terms as i32 + 1);
            check_budget(n_terms, cost, opts)?;
            Ok(ScalarField::new(FieldKind::Series, move |x| {
                tent_direct(&f0, alpha, n_terms, x[0])
            }))
        }
        MapKind::Tent => {
            let g = opts.grid_points.max(2);
            check_budget(n_terms, (n_terms as f64 + 1.0) * g as f64, opts)?;
            let grid = Arc::new(tent_grid(&f0, alpha, n_terms, g));
            Ok(ScalarField::new(FieldKind::Series, move |x| {
                interp_midpoints(&grid, x[0])
            }))
        }
        MapKind::CircleBoundary | MapKind::StandardMap => {
            check_budget(n_terms, n_terms as f64 + 1.0, opts)?;
            Ok(ScalarField::new(FieldKind::Series, move |x| {
                let mut y: Point = *x;
                let mut weight = 1.0;
                let mut sum = f0.eval(&y);
                for _ in 0..n_terms {
                    let (pre, jac) = map.pf_branches(&y)[0];
                    y = pre;
                    weight *= alpha * jac;
                    sum += weight * f0.eval(&y);
                }
                sum
            }))
        }
    }
}

fn check_budget(n_terms: usize, cost: f64, opts: &SeriesOptions) -> Result<(), TransferError> {
    if cost > opts.max_cost_per_point {
        return Err(TransferError::Budget {
            n_terms,
            cost,
            cap: opts.max_cost_per_point,
        });
    }
    Ok(())
}

fn tent_direct(f0: &ScalarField, alpha: f64, n_terms: usize, x: f64) -> f64 {
    let mut level = vec![x];
    let mut next = Vec::new();
    let mut sum = f0.eval(&[x, 0.0]);
    let mut weight = 1.0;
    for _ in 0..n_terms {
        next.clear();
        for &y in &level {
            next.push(0.5 * y);
            next.push(1.0 - 0.5 * y);
        }
        std::mem::swap(&mut level, &mut next);
        weight *= 0.5 * alpha;
        sum += weight * level.iter().map(|&y| f0.eval(&[y, 0.0])).sum::<f64>();
    }
    sum
}

/// Sum of the series at the midpoints `(i + 1/2)/g`.
fn tent_grid(f0: &ScalarField, alpha: f64, n_terms: usize, g: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..g).map(|i| (i as f64 + 0.5) / g as f64).collect();
    let mut term: Vec<f64> = xs.iter().map(|&x| f0.eval(&[x, 0.0])).collect();
    let mut sum = term.clone();
    let mut weight = 1.0;
    for _ in 0..n_terms {
        term = xs
            .iter()
            .map(|&x| {
                0.5 * interp_midpoints(&term, 0.5 * x) + 0.5 * interp_midpoints(&term, 1.0 - 0.5 * x)
            })
            .collect();
        weight *= alpha;
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += weight * t;
        }
    }
    sum
}

/// Piecewise-linear interpolation of midpoint samples on `[0, 1]`,
/// constant beyond the first and last midpoints.
fn interp_midpoints(v: &[f64], x: f64) -> f64 {
    let g = v.len();
    let s = x * g as f64 - 0.5;
    if s <= 0.0 {
        return v[0];
    }
    let i = s.floor() as usize;
    if i + 1 >= g {
        return v[g - 1];
    }
    let t = s - i as f64;
    (1.0 - t) * v[i] + t * v[i + 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapDescriptor;
    use crate::transfer::{apply_pf, manufactured, Manufactured};

    #[test]
    fn zero_terms_is_f0() {
        let (_, f0) = manufactured(Manufactured::SmoothExp, 0.5).unwrap();
        let prob = DampedProblem::new(MapDescriptor::tent(), 0.5, f0.clone()).unwrap();
        let s = truncated_series(&prob, 0, &SeriesOptions::default()).unwrap();
        assert_eq!(s.eval(&[0.3, 0.0]), f0.eval(&[0.3, 0.0]));
    }

    #[test]
    fn geometric_series_of_constant() {
        let prob = DampedProblem::new(MapDescriptor::tent(), 0.5, ScalarField::constant(1.0)).unwrap();
        let s = truncated_series(&prob, 20, &SeriesOptions::default()).unwrap();
        let expected = 2.0 - 2f64.powi(-20);
        for x in [0.0, 0.1, 0.5, 0.77, 1.0] {
            assert!((s.eval(&[x, 0.0]) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn direct_expansion_matches_nested_pf() {
        let f0 = ScalarField::analytic(|x| (3.0 * x[0]).sin() + x[0] * x[0]);
        let prob = DampedProblem::new(MapDescriptor::tent(), 0.7, f0.clone()).unwrap();
        let s = truncated_series(&prob, 4, &SeriesOptions::default()).unwrap();
        let map = MapDescriptor::tent();
        let mut term = f0.clone();
        let mut nested = f0.clone();
        for k in 1..=4 {
            term = apply_pf(&map, &term);
            nested = nested.add(&term.scale(0.7f64.powi(k)));
        }
        for x in [0.05, 0.4, 0.9] {
            assert!((s.eval(&[x, 0.0]) - nested.eval(&[x, 0.0])).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_path_agrees_with_direct_path() {
        let f0 = ScalarField::analytic(|x| x[0].exp());
        let prob = DampedProblem::new(MapDescriptor::tent(), 0.5, f0).unwrap();
        let direct = truncated_series(&prob, 12, &SeriesOptions::default()).unwrap();
        let opts = SeriesOptions {
            direct_max_terms: 4,
            ..Default::default()
        };
        let grid = truncated_series(&prob, 12, &opts).unwrap();
        for x in [0.1, 0.33, 0.5, 0.8] {
            assert!((direct.eval(&[x, 0.0]) - grid.eval(&[x, 0.0])).abs() < 1e-6);
        }
    }

    #[test]
    fn budget_guard() {
        let prob = DampedProblem::new(MapDescriptor::tent(), 0.5, ScalarField::constant(1.0)).unwrap();
        let opts = SeriesOptions {
            max_cost_per_point: 1000.0,
            ..Default::default()
        };
        assert!(matches!(
            truncated_series(&prob, 20, &opts),
            Err(TransferError::Budget { .. })
        ));
    }
}
