//! Error norms, convergence orders and the reference solutions they are
//! measured against.

use pfseries_core::maps::{DomainBox, MapKind};
use pfseries_core::quadrature::{AdaptiveIntegrator, QuadRule};
use pfseries_core::transfer::{planar_f0_norm, truncated_series, SeriesOptions};
use pfseries_core::{DampedProblem, ScalarField};
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// `‖approx - reference‖_{L²}` on `rule`.
pub fn l2_error(
    approx: &ScalarField,
    reference: &ScalarField,
    rule: &QuadRule,
) -> Result<f64, BenchError> {
    Ok(rule.l2_norm(&approx.sub(reference))?)
}

/// `log(e_i / e_{i+1}) / log(n_{i+1} / n_i)` per consecutive pair; `None`
/// where an error is zero, negative or non-finite.
pub fn eoc(errors: &[f64], ns: &[usize]) -> Result<Vec<Option<f64>>, BenchError> {
    if errors.len() != ns.len() || ns.len() < 2 {
        return Err(BenchError::Numerical(format!(
            "EOC needs two or more matching errors and sizes, got {} and {}",
            errors.len(),
            ns.len()
        )));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BenchError::Numerical("EOC sizes must increase".into()));
    }
    let ok = |e: f64| e > 0.0 && e.is_finite();
    Ok((0..ns.len() - 1)
        .map(|i| {
            let (a, b) = (errors[i], errors[i + 1]);
            (ok(a) && ok(b)).then(|| (a / b).ln() / (ns[i + 1] as f64 / ns[i] as f64).ln())
        })
        .collect())
}

/// Least-squares slope of `log e` against `log n`.
pub fn loglog_slope(ns: &[usize], errors: &[f64]) -> Option<f64> {
    if ns.len() != errors.len() || ns.len() < 2 || errors.iter().any(|e| !(*e > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    pub exact: bool,
    /// Series length for truncated references.
    pub n_terms: Option<usize>,
    /// Certified `L²` distance to the true solution.
    pub tail_bound: f64,
}

#[derive(Clone)]
pub struct Reference {
    pub field: ScalarField,
    pub info: ReferenceInfo,
}

/// Smallest `N` with `a^{N+1} ‖f0‖ / (1 - a) < tol`.
pub fn certified_terms(alpha: f64, f0_norm: f64, tol: f64) -> usize {
    let mut n = 0usize;
    let mut a = alpha;
    while a * f0_norm / (1.0 - alpha) >= tol {
        a *= alpha;
        n += 1;
    }
    n
}

/// The exact solution when one is known, otherwise the truncated series with
/// a certified tail below `tol`.
pub fn reference_solution(
    prob: &DampedProblem,
    exact: Option<&ScalarField>,
    tol: f64,
    opts: &SeriesOptions,
) -> Result<Reference, BenchError> {
    if let Some(u) = exact {
        return Ok(Reference {
            field: u.clone(),
            info: ReferenceInfo {
                exact: true,
                n_terms: None,
                tail_bound: 0.0,
            },
        });
    }
    let f0_norm = match planar_f0_norm(prob.map.kind) {
        Some(v) if prob.map.kind != MapKind::Tent => v,
        _ => {
            let f0 = prob.f0.clone();
            let sq = ScalarField::analytic(move |x| f0.eval(x).powi(2));
            AdaptiveIntegrator::new(1e-10)
                .integrate(&prob.map.domain, &sq)?
                .value
                .sqrt()
        }
    };
    let n = certified_terms(prob.alpha, f0_norm, tol);
    let field = truncated_series(prob, n, opts)?;
    let tail_bound = prob.alpha.powi(n as i32 + 1) * f0_norm / (1.0 - prob.alpha);
    Ok(Reference {
        field,
        info: ReferenceInfo {
            exact: false,
            n_terms: Some(n),
            tail_bound,
        },
    })
}

/// Composite 1D rule with panels split at `breaks`; graded toward the left
/// end down to width 1e-30 when the integrand is singular there.
pub fn error_rule_1d(
    domain: &DomainBox,
    breaks: &[f64],
    singular_at_lo: bool,
) -> Result<QuadRule, BenchError> {
    Ok(if singular_at_lo {
        QuadRule::graded_1d(domain, breaks, 1e-30, 8)?
    } else {
        QuadRule::composite(domain, &[breaks.to_vec()], 8)?
    })
}

/// 32 x 32 panels with 4 x 4 Gauss points each.
pub fn error_rule_2d(domain: &DomainBox) -> Result<QuadRule, BenchError> {
    Ok(QuadRule::cell_aligned(domain, &[32, 32], 4)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_of_exact_second_order() {
        let e = eoc(&[1.0, 0.25, 0.0625], &[1, 2, 4]).unwrap();
        assert_eq!(e.len(), 2);
        for v in e {
            assert!((v.unwrap() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eoc_marks_zero_errors() {
        let e = eoc(&[1.0, 0.0, 0.5], &[1, 2, 4]).unwrap();
        assert_eq!(e, vec![None, None]);
        assert!(eoc(&[1.0], &[1]).is_err());
        assert!(eoc(&[1.0, 0.5], &[2, 1]).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let ns = [4, 8, 16, 32];
        let e: Vec<f64> = ns.iter().map(|n| 3.0 * (*n as f64).powf(-1.5)).collect();
        assert!((loglog_slope(&ns, &e).unwrap() + 1.5).abs() < 1e-12);
    }

    #[test]
    fn l2_error_of_shift() {
        let rule = QuadRule::gauss(&DomainBox::unit_interval(), 10).unwrap();
        let u = ScalarField::analytic(|x| x[0].sin());
        assert_eq!(l2_error(&u, &u, &rule).unwrap(), 0.0);
        let v = u.add(&ScalarField::constant(0.3));
        assert!((l2_error(&v, &u, &rule).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn certified_length() {
        // 0.5^{N+1} * 2 < 1e-6 first holds at N + 1 = 21.
        assert_eq!(certified_terms(0.5, 1.0, 1e-6), 20);
        assert_eq!(certified_terms(0.5, 1e-9, 1e-6), 0);
    }
}
