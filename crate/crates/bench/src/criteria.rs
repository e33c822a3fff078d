//! The acceptance suite. Each criterion builds its own pinned configuration,
//! so results do not depend on the user's config file.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use pfseries_core::galerkin::{galerkin_field, l2_projection, Basis, Partition};
use pfseries_core::maps::{DomainBox, MapDescriptor, MapKind};
use pfseries_core::quadrature::QuadRule;
use pfseries_core::training::{
    exact_loss_rule, sup_form_check, Loss, LossSpec,
};
use pfseries_core::transfer::{
    apply_koopman, apply_pf, bilinear_b, circle_f0, planar_f0_norm, residual, standard_f0,
    truncated_series, FormPath, ProblemCase, SeriesOptions,
};
use pfseries_core::{DampedProblem, NetParams, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{
    BasisChoice, ExperimentConfig, InitChoice, Method, OptimizerChoice, RuleChoice,
};
use crate::experiments::{eoc_sweep, quad_study, run_galerkin, run_network, Setup};
use crate::metrics::error_rule_1d;
use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub measured: String,
    pub required: String,
    pub wall_ms: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2}. {} | measured: {} | required: {} | {:.1} s",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.required,
            self.wall_ms / 1e3
        )
    }
}

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub limit_s: f64,
    /// Trains networks; skipped by `check.skip_training`.
    pub training: bool,
}

pub const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, name: "smooth-case convergence rate", limit_s: 300.0, training: true },
    Criterion { id: 2, name: "singular-case fixed-grid EOC", limit_s: 60.0, training: false },
    Criterion { id: 3, name: "singular-case PINNs beats fixed grid", limit_s: 600.0, training: true },
    Criterion { id: 4, name: "RVPINNs loss-form equivalence", limit_s: 60.0, training: false },
    Criterion { id: 5, name: "manufactured exactness", limit_s: 10.0, training: false },
    Criterion { id: 6, name: "duality and coercivity", limit_s: 60.0, training: false },
    Criterion { id: 7, name: "series residual bound", limit_s: 120.0, training: false },
    Criterion { id: 8, name: "Galerkin quasi-optimality", limit_s: 60.0, training: false },
    Criterion { id: 9, name: "loss gradient vs finite differences", limit_s: 120.0, training: false },
    Criterion { id: 10, name: "2D reproduction and continuation", limit_s: 1800.0, training: true },
    Criterion { id: 11, name: "quadrature discrepancy trend", limit_s: 60.0, training: false },
];

struct Verdict {
    passed: bool,
    measured: String,
    required: String,
}

/// Runs one criterion; the runtime limit is part of the verdict.
pub fn run_criterion(id: u32) -> Result<CriterionResult, BenchError> {
    let c = CRITERIA
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| BenchError::Config(format!("no criterion {id}")))?;
    let t0 = Instant::now();
    let v = match id {
        1 => single_threaded(c1_smooth_rate)?,
        2 => c2_fixed_grid_eoc()?,
        3 => c3_pinns_singular()?,
        4 => c4_loss_forms()?,
        5 => c5_manufactured()?,
        6 => c6_duality()?,
        7 => c7_series_bound()?,
        8 => c8_quasi_optimality()?,
        9 => c9_gradients()?,
        10 => c10_planar()?,
        _ => c11_quad_trend()?,
    };
    let wall_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(CriterionResult {
        id,
        name: c.name.into(),
        passed: v.passed && wall_ms <= c.limit_s * 1e3,
        measured: v.measured,
        required: format!("{}; runtime < {} s", v.required, c.limit_s),
        wall_ms,
    })
}

/// Runs every criterion (or only the fast ones), never stopping early.
pub fn run_all(skip_training: bool) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .filter(|c| !(skip_training && c.training))
        .map(|c| {
            run_criterion(c.id).unwrap_or_else(|e| CriterionResult {
                id: c.id,
                name: c.name.into(),
                passed: false,
                measured: format!("error: {e}"),
                required: "completes without error".into(),
                wall_ms: 0.0,
            })
        })
        .collect()
}

fn single_threaded<T: Send>(
    f: impl FnOnce() -> Result<T, BenchError> + Send,
) -> Result<T, BenchError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| BenchError::Numerical(e.to_string()))?
        .install(f)
}

fn tent_config(case: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.problem.case = case.into();
    cfg
}

fn fmt_list(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", s.join(", "))
}

fn fmt_opt_list(v: &[Option<f64>]) -> String {
    let s: Vec<String> = v
        .iter()
        .map(|x| x.map_or("undefined".into(), |x| format!("{x:.4}")))
        .collect();
    format!("[{}]", s.join(", "))
}

/// PINNs, tent map, smooth case: uniform breakpoints, outer fit, BFGS.
pub fn smooth_pinns_config() -> ExperimentConfig {
    let mut cfg = tent_config("smooth_exp");
    cfg.net.init = Some(InitChoice::Uniform);
    cfg.train.optimizer = Some(OptimizerChoice::Bfgs);
    cfg.sweep.method = Method::Pinns;
    cfg
}

fn c1_smooth_rate() -> Result<Verdict, BenchError> {
    let sweep = eoc_sweep(&Setup::new(&smooth_pinns_config())?)?;
    let errors: Vec<f64> = sweep.rows.iter().map(|r| r.l2_error).collect();
    let slope = sweep.slope.unwrap_or(f64::NAN);
    Ok(Verdict {
        passed: (-2.4..=-1.6).contains(&slope),
        measured: format!("slope {slope:.4}, errors {}", fmt_list(&errors)),
        required: "log-log slope in [-2.4, -1.6]".into(),
    })
}

/// Hat-basis Galerkin on the singular case with a 501-point rule.
pub fn singular_galerkin_config() -> ExperimentConfig {
    let mut cfg = tent_config("singular");
    cfg.galerkin.basis = Some(BasisChoice::Hat);
    cfg.quad.n_per_dim = 501;
    cfg.sweep.method = Method::Galerkin;
    cfg
}

fn c2_fixed_grid_eoc() -> Result<Verdict, BenchError> {
    let sweep = eoc_sweep(&Setup::new(&singular_galerkin_config())?)?;
    let e: Vec<Option<f64>> = sweep.eoc.iter().map(|r| r.eoc).collect();
    let ok = |v: Option<f64>| v.is_some_and(|v| (v - 0.167).abs() <= 0.05);
    Ok(Verdict {
        passed: ok(e[1]) && ok(e[2]),
        measured: format!("EOC {}", fmt_opt_list(&e)),
        required: "EOC 8->16 and 16->32 within 0.167 +- 0.05".into(),
    })
}

/// PINNs on the singular case from geometric breakpoints with r = 0.662.
pub fn singular_pinns_config() -> ExperimentConfig {
    let mut cfg = tent_config("singular");
    cfg.net.init = Some(InitChoice::Geometric);
    cfg.net.r = 0.662;
    cfg.train.optimizer = Some(OptimizerChoice::Bfgs);
    // The residual carries the x^(-1/3) singularity, which a uniform Gauss
    // rule never resolves near 0.
    cfg.quad.rule = RuleChoice::Graded;
    cfg.quad.graded_min_width = 1e-10;
    cfg.quad.graded_points_per_panel = 4;
    cfg.sweep.method = Method::Pinns;
    cfg
}

fn c3_pinns_singular() -> Result<Verdict, BenchError> {
    let grid = eoc_sweep(&Setup::new(&singular_galerkin_config())?)?;
    let net = eoc_sweep(&Setup::new(&singular_pinns_config())?)?;
    let (gl, nl) = (grid.rows.last().unwrap(), net.rows.last().unwrap());
    let ge: Vec<Option<f64>> = grid.eoc.iter().map(|r| r.eoc).collect();
    let ne: Vec<Option<f64>> = net.eoc.iter().map(|r| r.eoc).collect();
    let eoc_ok = ge
        .iter()
        .zip(&ne)
        .all(|(g, n)| matches!((g, n), (Some(g), Some(n)) if n > g));
    Ok(Verdict {
        passed: nl.l2_error < gl.l2_error && eoc_ok,
        measured: format!(
            "n=32 error PINNs {:.4e} vs grid {:.4e}; EOC PINNs {} vs grid {}",
            nl.l2_error,
            gl.l2_error,
            fmt_opt_list(&ne),
            fmt_opt_list(&ge)
        ),
        required: "PINNs error < grid error at n=32 and PINNs EOC > grid EOC for every pair".into(),
    })
}

/// A random network: 1D kinks uniform in the domain with slopes of random
/// sign and magnitude in [0.5, 3]; 2D kink lines through uniform domain
/// points with uniform directions and magnitudes in [0.5, 2]. Outer
/// parameters uniform in [-1, 1].
pub fn random_params(domain: &DomainBox, n: usize, rng: &mut ChaCha8Rng) -> NetParams {
    let dim = domain.dim();
    let mut p = NetParams::zeros(dim, n).expect("n > 0");
    for j in 0..n {
        if dim == 1 {
            let w = rng.gen_range(0.5..3.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let t = rng.gen_range(domain.lo(0)..domain.hi(0));
            p.inner_weights[j] = w;
            p.inner_biases[j] = -w * t;
        } else {
            let (a, m) = (rng.gen_range(0.0..TAU), rng.gen_range(0.5..2.0));
            let (w0, w1) = (m * a.cos(), m * a.sin());
            let z0 = rng.gen_range(domain.lo(0)..domain.hi(0));
            let z1 = rng.gen_range(domain.lo(1)..domain.hi(1));
            p.inner_weights[2 * j] = w0;
            p.inner_weights[2 * j + 1] = w1;
            p.inner_biases[j] = -(w0 * z0 + w1 * z1);
        }
        p.outer_weights[j] = rng.gen_range(-1.0..1.0);
    }
    p.outer_bias = rng.gen_range(-1.0..1.0);
    p
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Largest relative disagreement between the three RVPINNs loss forms over
/// `count` random networks.
pub fn loss_form_gap(
    prob: &DampedProblem,
    cells: usize,
    n_hidden: usize,
    count: usize,
    seed: u64,
) -> Result<f64, BenchError> {
    let basis = Basis::indicator(Partition::uniform(prob.map.domain, cells)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..count {
        let params = random_params(&prob.map.domain, n_hidden, &mut rng);
        let rule = exact_loss_rule(prob, &params, &basis)?;
        let spec = LossSpec::rvpinns(basis.clone(), rule, FormPath::Pf)?;
        let sum_form = spec.compile(prob)?.value(&params);
        let koopman = spec.clone().with_path(FormPath::Koopman).compile(prob)?.value(&params);
        let sup = sup_form_check(&spec, prob, &params, 0, seed + k as u64)?;
        let ratio = sup.supremizer_ratio.unwrap_or(0.0);
        worst = worst
            .max(rel_diff(sum_form, koopman))
            .max(rel_diff(sum_form, ratio))
            .max(rel_diff(koopman, ratio));
    }
    Ok(worst)
}

fn c4_loss_forms() -> Result<Verdict, BenchError> {
    let (tent, _) = DampedProblem::from_case(MapDescriptor::tent(), ProblemCase::SmoothExp, 0.5)?;
    let circle = DampedProblem::new(MapDescriptor::circle_boundary(), 0.5, circle_f0())?;
    let g1 = loss_form_gap(&tent, 8, 8, 20, 11)?;
    let g2 = loss_form_gap(&circle, 8, 8, 20, 12)?;
    Ok(Verdict {
        passed: g1 < 1e-8 && g2 < 1e-8,
        measured: format!("max relative gap tent {g1:.2e}, circle {g2:.2e}"),
        required: "sum, supremizer and Koopman forms agree to relative 1e-8 on 20 random networks each".into(),
    })
}

/// Sup of `|f0 - (I - aP)u|` over `count` uniform interior points.
pub fn manufactured_residual(case: ProblemCase, alpha: f64, count: usize, seed: u64) -> Result<f64, BenchError> {
    let (prob, exact) = DampedProblem::from_case(MapDescriptor::tent(), case, alpha)?;
    let u = exact.ok_or_else(|| BenchError::Numerical("case has no exact solution".into()))?;
    let r = residual(&prob, &u);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let x: f64 = rng.gen();
        if x > 0.0 {
            worst = worst.max(r.eval(&[x, 0.0]).abs());
        }
    }
    Ok(worst)
}

fn c5_manufactured() -> Result<Verdict, BenchError> {
    let r1 = manufactured_residual(ProblemCase::SmoothExp, 0.5, 1000, 5)?;
    let r2 = manufactured_residual(ProblemCase::Singular, 0.5, 1000, 6)?;
    Ok(Verdict {
        passed: r1 <= 1e-10 && r2 <= 1e-10,
        measured: format!("sup residual smooth {r1:.2e}, singular {r2:.2e}"),
        required: "sup residual <= 1e-10 over 1000 random points".into(),
    })
}

/// A random smooth field: a degree-2 trigonometric polynomial in periodic
/// coordinates (period = domain width) and a cubic polynomial otherwise.
pub fn random_smooth_field(domain: &DomainBox, rng: &mut ChaCha8Rng) -> ScalarField {
    let dim = domain.dim();
    let mut axes: Vec<Vec<f64>> = Vec::new();
    for _ in 0..dim {
        axes.push((0..5).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let d = *domain;
    let basis = move |axis: usize, k: usize, t: f64| -> f64 {
        let s = (t - d.lo(axis)) / d.width(axis);
        if d.is_periodic(axis) {
            match k {
                0 => 1.0,
                1 => (TAU * s).cos(),
                2 => (TAU * s).sin(),
                3 => (2.0 * TAU * s).cos(),
                _ => (2.0 * TAU * s).sin(),
            }
        } else {
            // Smooth and non-periodic: exponentials and polynomials.
            match k {
                0 => 1.0,
                1 => s,
                2 => s * s,
                3 => s * s * s,
                _ => (2.0 * s).exp(),
            }
        }
    };
    ScalarField::analytic(move |x| {
        let mut v = 1.0;
        for (axis, c) in axes.iter().enumerate() {
            v *= c.iter().enumerate().map(|(k, ck)| ck * basis(axis, k, x[axis])).sum::<f64>();
        }
        v
    })
}

/// Worst duality gap `|∫(Pu)v - ∫u(Kv)| / (‖u‖‖v‖)` and worst coercivity
/// margin `b(u,u) - (1-a)‖u‖²` over `count` random field pairs.
pub fn duality_coercivity(
    map: MapDescriptor,
    alpha: f64,
    count: usize,
    seed: u64,
) -> Result<(f64, f64), BenchError> {
    let rule = match map.kind {
        // Kv is kinked at the fold.
        MapKind::Tent => QuadRule::composite(&map.domain, &[vec![0.5]], 30)?,
        _ => QuadRule::gauss(&map.domain, 64)?,
    };
    let prob = DampedProblem::new(map, alpha, ScalarField::zero())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut gap, mut margin) = (0.0f64, f64::INFINITY);
    for _ in 0..count {
        let u = random_smooth_field(&map.domain, &mut rng);
        let v = random_smooth_field(&map.domain, &mut rng);
        let pu_v = rule.integrate(&apply_pf(&map, &u).mul(&v))?;
        let u_kv = rule.integrate(&u.mul(&apply_koopman(&map, &v)))?;
        let (nu, nv) = (rule.l2_norm(&u)?, rule.l2_norm(&v)?);
        gap = gap.max((pu_v - u_kv).abs() / (nu * nv));
        let b = bilinear_b(&prob, &u, &u, &rule, FormPath::Pf)?;
        margin = margin.min(b - (1.0 - alpha) * nu * nu);
    }
    Ok((gap, margin))
}

fn c6_duality() -> Result<Verdict, BenchError> {
    let mut passed = true;
    let mut parts = Vec::new();
    for (i, map) in [
        MapDescriptor::tent(),
        MapDescriptor::circle_boundary(),
        MapDescriptor::standard_map(2.4),
    ]
    .into_iter()
    .enumerate()
    {
        let (gap, margin) = duality_coercivity(map, 0.5, 100, 60 + i as u64)?;
        passed &= gap <= 1e-8 && margin >= -1e-8;
        parts.push(format!("{}: gap {gap:.1e}, margin {margin:.3e}", map.kind));
    }
    Ok(Verdict {
        passed,
        measured: parts.join("; "),
        required: "duality gap <= 1e-8 (relative to ‖u‖‖v‖) and b(u,u) >= (1-a)‖u‖² - 1e-8, 100 pairs per map".into(),
    })
}

/// `(‖(I - aP)u_N - f0‖, a^{N+1}‖f0‖)` for the native data of `map`.
///
/// Both planar maps are area-preserving bijections, so `∫g = ∫g∘S^{N+1}` and
/// the norm is taken on Gauss nodes transported by `S^{N+1}`. Up to
/// round-off the transported residual is `-a^{N+1} f0`, which the base rule
/// (split at the kinks of `f0`) integrates to near machine precision. On the
/// original nodes the residual carries filaments stretched by `N + 1` steps
/// of the map, which no affordable rule resolves for the standard map.
pub fn series_residual(map: MapDescriptor, n_terms: usize) -> Result<(f64, f64), BenchError> {
    let alpha = 0.5;
    let (case, kinks): (ProblemCase, [Vec<f64>; 2]) = match map.kind {
        MapKind::Tent => (ProblemCase::SmoothExp, [vec![], vec![]]),
        MapKind::CircleBoundary => (
            ProblemCase::CircleF0,
            [vec![0.5 * PI, 1.5 * PI], vec![-0.25 * PI, 0.25 * PI]],
        ),
        MapKind::StandardMap => (
            ProblemCase::StandardF0,
            [vec![0.75 * PI, 1.25 * PI], vec![0.75 * PI, 1.25 * PI]],
        ),
    };
    let (prob, _) = DampedProblem::from_case(map, case, alpha)?;
    let u = truncated_series(&prob, n_terms, &SeriesOptions::default())?;
    let r = residual(&prob, &u);
    if map.kind == MapKind::Tent {
        // Both the residual and f0 are smooth here.
        let rule = QuadRule::gauss(&map.domain, 48)?;
        let (lhs, norm_f0) = (rule.l2_norm(&r)?, rule.l2_norm(&prob.f0)?);
        return Ok((lhs, alpha.powi(n_terms as i32 + 1) * norm_f0));
    }
    let d = map.domain;
    let breaks: Vec<Vec<f64>> = (0..2)
        .map(|axis| {
            let mut b = kinks[axis].clone();
            b.extend((1..16).map(|k| d.lo(axis) + d.width(axis) * k as f64 / 16.0));
            b
        })
        .collect();
    let base = QuadRule::composite(&d, &breaks, 8)?;
    let moved: Vec<_> = base
        .nodes()
        .iter()
        .map(|y| (0..=n_terms).fold(*y, |x, _| map.forward_unchecked(&x)))
        .collect();
    let transported = QuadRule::from_parts(2, moved, base.weights().to_vec(), base.order_per_dim())?;
    let norm_f0 = planar_f0_norm(map.kind).expect("planar map");
    Ok((
        transported.l2_norm(&r)?,
        alpha.powi(n_terms as i32 + 1) * norm_f0,
    ))
}

fn c7_series_bound() -> Result<Verdict, BenchError> {
    let mut passed = true;
    let mut parts = Vec::new();
    for map in [
        MapDescriptor::tent(),
        MapDescriptor::circle_boundary(),
        MapDescriptor::standard_map(2.4),
    ] {
        for n in [5, 10, 20] {
            let (lhs, bound) = series_residual(map, n)?;
            passed &= lhs <= bound + 1e-8;
            parts.push(format!("{} N={n}: {lhs:.6e} vs {bound:.6e}", map.kind));
        }
    }
    Ok(Verdict {
        passed,
        measured: parts.join("; "),
        required: "‖(I-aP)u_N - f0‖ <= a^{N+1}‖f0‖ + 1e-8 for N in {5, 10, 20}".into(),
    })
}

/// `(Galerkin error, ‖u - Π_M u‖)` for the hat basis on `m` cells.
pub fn quasi_optimality(case: &str, m: usize) -> Result<(f64, f64), BenchError> {
    let mut cfg = tent_config(case);
    cfg.galerkin.basis = Some(BasisChoice::Hat);
    cfg.quad.n_per_dim = 501;
    let setup = Setup::new(&cfg)?;
    let reference = setup.reference()?;
    let run = run_galerkin(&setup, m, Some(&reference))?;
    let basis = Basis::hat(setup.prob.map.domain, m)?;
    let mut breaks = basis.partition().breaks(0);
    breaks.extend([0.0, 1.0]);
    let rule = error_rule_1d(&setup.prob.map.domain, &breaks, case == "singular")?;
    let proj = galerkin_field(&basis, &l2_projection(&basis, &reference.field, &rule)?)?;
    let best = rule.l2_norm(&reference.field.sub(&proj))?;
    Ok((run.l2_error.expect("reference given"), best))
}

fn c8_quasi_optimality() -> Result<Verdict, BenchError> {
    let alpha: f64 = 0.5;
    let c = 2.0 / (1.0 - alpha);
    let mut passed = true;
    let mut parts = Vec::new();
    for case in ["smooth_exp", "singular"] {
        for m in [8, 16, 32] {
            let (err, best) = quasi_optimality(case, m)?;
            passed &= err <= c * best;
            parts.push(format!("{case} M={m}: {err:.3e} <= {:.3e}", c * best));
        }
    }
    Ok(Verdict {
        passed,
        measured: parts.join("; "),
        required: "‖u - u_M‖ <= 2/(1-a) ‖u - Π_M u‖ for M in {8, 16, 32}".into(),
    })
}

/// Relative sup-norm mismatch between the analytic loss gradient and
/// central differences with step `h`.
pub fn gradient_mismatch(loss: &Loss, params: &NetParams, h: f64) -> f64 {
    let (_, g) = loss.loss_gradient(params);
    let x0 = params.to_flat();
    let mut p = params.clone();
    let mut diff: f64 = 0.0;
    for i in 0..x0.len() {
        let mut x = x0.clone();
        x[i] = x0[i] + h;
        p.set_flat(&x).expect("same length");
        let up = loss.value(&p);
        x[i] = x0[i] - h;
        p.set_flat(&x).expect("same length");
        let down = loss.value(&p);
        diff = diff.max(((up - down) / (2.0 * h) - g[i]).abs());
    }
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Smallest `|w_j·x + b_j|` over every point the loss evaluates the network at.
pub fn kink_margin(loss: &Loss, params: &NetParams) -> f64 {
    loss.points()
        .iter()
        .map(|x| params.min_abs_preactivation(x))
        .fold(f64::INFINITY, f64::min)
}

/// Worst gradient mismatch over `count` random parameter points whose kinks
/// stay at least `1e-4` away from every loss point (so a step of `1e-6`
/// never crosses one).
pub fn gradient_check(
    loss: &Loss,
    domain: &DomainBox,
    n_hidden: usize,
    count: usize,
    seed: u64,
) -> Result<f64, BenchError> {
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut accepted, mut worst) = (0, 0.0f64);
    for _ in 0..100 * count {
        if accepted == count {
            break;
        }
        let p = random_params(domain, n_hidden, &mut rng);
        if kink_margin(loss, &p) < 1e-4 {
            continue;
        }
        accepted += 1;
        worst = worst.max(gradient_mismatch(loss, &p, h));
    }
    if accepted < count {
        return Err(BenchError::Numerical(format!(
            "only {accepted} of {count} kink-free parameter points found"
        )));
    }
    Ok(worst)
}

fn c9_gradients() -> Result<Verdict, BenchError> {
    let (tent, _) = DampedProblem::from_case(MapDescriptor::tent(), ProblemCase::SmoothExp, 0.5)?;
    let circle = DampedProblem::new(MapDescriptor::circle_boundary(), 0.5, circle_f0())?;
    let standard = DampedProblem::new(MapDescriptor::standard_map(2.4), 0.5, standard_f0())?;
    let rv = |prob: &DampedProblem, cells: usize, per: usize| -> Result<Loss, BenchError> {
        let part = Partition::uniform(prob.map.domain, cells)?;
        let rule = part.aligned_rule(per)?;
        Ok(LossSpec::rvpinns(Basis::indicator(part), rule, FormPath::Pf)?.compile(prob)?)
    };
    let pinns = |prob: &DampedProblem, q: usize| -> Result<Loss, BenchError> {
        Ok(Loss::pinns(prob, &QuadRule::gauss(&prob.map.domain, q)?, 2.0)?)
    };
    let cases: Vec<(&str, Loss, &DampedProblem)> = vec![
        ("PINNs tent", pinns(&tent, 101)?, &tent),
        ("RVPINNs tent", rv(&tent, 8, 4)?, &tent),
        ("PINNs circle", pinns(&circle, 12)?, &circle),
        ("RVPINNs circle", rv(&circle, 4, 3)?, &circle),
        ("PINNs standard", pinns(&standard, 12)?, &standard),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (i, (name, loss, prob)) in cases.iter().enumerate() {
        let worst = gradient_check(loss, &prob.map.domain, 8, 100, 90 + i as u64)?;
        passed &= worst < 1e-5;
        parts.push(format!("{name} {worst:.1e}"));
    }
    Ok(Verdict {
        passed,
        measured: format!("worst relative mismatch: {}", parts.join(", ")),
        required: "relative gradient error < 1e-5 at 100 kink-avoiding points per loss".into(),
    })
}

/// Circle boundary map, 32 neurons, trained with `method`.
pub fn circle_config(method: Method) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.problem.map = "circle_boundary".into();
    cfg.problem.case = "circle_f0".into();
    cfg.net.n_hidden = 32;
    // The random init decides most of the outcome; six seeds are screened
    // for 2000 iterations and the lowest loss continues.
    cfg.net.restarts = 6;
    cfg.net.screen_iters = 2000;
    cfg.train.max_iters = Some(20_000);
    cfg.train.adam.step = 3e-3;
    // An 8x8 test space leaves the 97 parameters underdetermined: the loss
    // goes to zero while the error does not.
    cfg.train.test_cells_per_dim = 32;
    cfg.sweep.method = method;
    cfg
}

/// Standard map at a = 0.9, 32 neurons, PINNs loss.
pub fn standard_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.problem.map = "standard_map".into();
    cfg.problem.case = "standard_f0".into();
    cfg.problem.alpha = 0.9;
    cfg.net.n_hidden = 32;
    cfg
}

/// Relative `L²` distance of a trained circle-map network to the reference.
pub fn circle_relative_error(method: Method) -> Result<f64, BenchError> {
    let setup = Setup::new(&circle_config(method))?;
    let reference = setup.reference()?;
    let run = run_network(&setup, method, 32, Some(&reference))?;
    let norm = setup.error_rule(&[])?.l2_norm(&reference.field)?;
    Ok(run.l2_error.expect("reference given") / norm)
}

/// Final loss at a = 0.9 after the continuation schedule and after a cold
/// start given the same total iteration budget.
pub fn continuation_vs_cold(stage_iters: usize) -> Result<(f64, f64), BenchError> {
    let mut cont = standard_config();
    cont.train.continuation_alphas = vec![0.1, 0.5, 0.9];
    cont.train.max_iters = Some(stage_iters);
    let warm = run_network(&Setup::new(&cont)?, Method::Pinns, 32, None)?;
    let mut cold = standard_config();
    cold.train.max_iters = Some(3 * stage_iters);
    let cold = run_network(&Setup::new(&cold)?, Method::Pinns, 32, None)?;
    Ok((warm.final_loss, cold.final_loss))
}

fn c10_planar() -> Result<Verdict, BenchError> {
    let e_p = circle_relative_error(Method::Pinns)?;
    let e_r = circle_relative_error(Method::Rvpinns)?;
    let (warm, cold) = continuation_vs_cold(5000)?;
    Ok(Verdict {
        passed: e_p < 0.15 && e_r < 0.15 && warm <= cold,
        measured: format!(
            "circle relative L2 PINNs {e_p:.4}, RVPINNs {e_r:.4}; standard map loss continuation {warm:.4e} vs cold {cold:.4e}"
        ),
        required: "relative L2 < 0.15 for both; continuation loss <= cold-start loss".into(),
    })
}

fn c11_quad_trend() -> Result<Verdict, BenchError> {
    let mut cfg = tent_config("smooth_exp");
    cfg.net.n_hidden = 32;
    cfg.net.init = Some(InitChoice::Uniform);
    let study = quad_study(&Setup::new(&cfg)?)?;
    let d: Vec<f64> = study.rows.iter().map(|r| r.abs_discrepancy).collect();
    Ok(Verdict {
        passed: d.windows(2).all(|w| w[1] <= w[0]),
        measured: format!("|loss(q) - loss_adaptive| for q = 11, 31, 101, 301: {}", {
            let s: Vec<String> = d.iter().map(|v| format!("{v:.3e}")).collect();
            s.join(", ")
        }),
        required: "non-increasing in q".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_params_put_kinks_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_params(&DomainBox::unit_interval(), 16, &mut rng);
        assert!(p.kinks_1d().iter().all(|t| (0.0..1.0).contains(t)));
    }

    #[test]
    fn tent_duality_on_random_fields() {
        let (gap, margin) = duality_coercivity(MapDescriptor::tent(), 0.5, 3, 0).unwrap();
        assert!(gap < 1e-12);
        assert!(margin > -1e-12);
    }

    #[test]
    fn unknown_criterion_is_a_config_error() {
        assert!(matches!(run_criterion(99), Err(BenchError::Config(_))));
    }
}
