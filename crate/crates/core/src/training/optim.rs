//! Fixed-step Adam and dense BFGS with a strong-Wolfe line search.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, norm_inf};

/// A smooth objective with a separately reported figure of merit (the
/// unsquared loss, when the objective is its square).
pub trait Objective {
    fn dim(&self) -> usize;
    /// `(objective, gradient, reported loss)`.
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>, f64);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub step: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            step: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BfgsConfig {
    pub c1: f64,
    pub c2: f64,
    /// Objective evaluations allowed per line search.
    pub max_trials: usize,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        BfgsConfig {
            c1: 1e-4,
            c2: 0.9,
            max_trials: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Adam(AdamConfig),
    Bfgs(BfgsConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub loss_tol: f64,
    /// Iterations over which the objective change is compared with `loss_tol`.
    pub window: usize,
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig {
            max_iters: 2000,
            grad_tol: 1e-9,
            loss_tol: 1e-12,
            window: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradTol,
    LossTol,
    MaxIters,
    /// Neither the line search nor the gradient fallback decreased the objective.
    Stalled,
    /// Non-finite objective or gradient.
    Aborted(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptOutcome {
    pub x: Vec<f64>,
    /// Reported loss at `x`.
    pub loss: f64,
    pub objective: f64,
    pub iters: usize,
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
    pub stop: StopReason,
    pub gd_fallbacks: usize,
    pub hessian_resets: usize,
}

struct Tracker<'a, O: Objective + ?Sized> {
    obj: &'a O,
    start: Instant,
    evaluations: usize,
    trace: Vec<TraceEntry>,
    history: Vec<f64>,
}

impl<O: Objective + ?Sized> Tracker<'_, O> {
    fn eval(&mut self, x: &[f64]) -> (f64, Vec<f64>, f64) {
        self.evaluations += 1;
        self.obj.eval(x)
    }

    fn record(&mut self, iter: usize, loss: f64, grad: &[f64], objective: f64) {
        self.trace.push(TraceEntry {
            iter,
            loss,
            grad_norm: norm_inf(grad),
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        });
        self.history.push(objective);
    }

    fn converged(&self, stop: &StopConfig, grad: &[f64]) -> Option<StopReason> {
        if norm_inf(grad) < stop.grad_tol {
            return Some(StopReason::GradTol);
        }
        let h = &self.history;
        if stop.window > 0 && h.len() > stop.window {
            let last = h[h.len() - 1];
            let before = h[h.len() - 1 - stop.window];
            if (before - last).abs() < stop.loss_tol {
                return Some(StopReason::LossTol);
            }
        }
        None
    }
}

fn finite(v: f64, g: &[f64]) -> bool {
    v.is_finite() && g.iter().all(|x| x.is_finite())
}

/// Runs the optimizer from `x0`. A non-finite evaluation ends the run with
/// [`StopReason::Aborted`] and the last finite iterate.
pub fn minimize<O: Objective + ?Sized>(
    obj: &O,
    x0: &[f64],
    opt: &Optimizer,
    stop: &StopConfig,
) -> OptOutcome {
    let mut t = Tracker {
        obj,
        start: Instant::now(),
        evaluations: 0,
        trace: Vec::new(),
        history: Vec::new(),
    };
    match opt {
        Optimizer::Adam(cfg) => adam(&mut t, x0, cfg, stop),
        Optimizer::Bfgs(cfg) => bfgs(&mut t, x0, cfg, stop),
    }
}

/// Adam with bias correction. Returns the iterate with the lowest objective.
fn adam<O: Objective + ?Sized>(
    t: &mut Tracker<'_, O>,
    x0: &[f64],
    cfg: &AdamConfig,
    stop: &StopConfig,
) -> OptOutcome {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut m, mut v) = (vec![0.0; n], vec![0.0; n]);
    let (mut b1t, mut b2t) = (1.0, 1.0);
    let mut best = (x.clone(), f64::INFINITY, f64::INFINITY);
    let mut reason = StopReason::MaxIters;
    let mut iters = 0;
    loop {
        let (f, g, loss) = t.eval(&x);
        if !finite(f, &g) {
            reason = StopReason::Aborted(format!("non-finite objective at iteration {iters}"));
            break;
        }
        t.record(iters, loss, &g, f);
        if f < best.1 {
            best = (x.clone(), f, loss);
        }
        if let Some(r) = t.converged(stop, &g) {
            reason = r;
            break;
        }
        if iters >= stop.max_iters {
            break;
        }
        iters += 1;
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        for i in 0..n {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let mh = m[i] / (1.0 - b1t);
            let vh = v[i] / (1.0 - b2t);
            x[i] -= cfg.step * mh / (vh.sqrt() + cfg.eps);
        }
    }
    let (x, f, loss) = best;
    finish(t, x, f, loss, iters, reason, 0, 0)
}

struct Point1 {
    a: f64,
    f: f64,
    d: f64,
    g: Vec<f64>,
    loss: f64,
}

enum Search {
    Found(Point1),
    Failed,
    Aborted,
}

fn bfgs<O: Objective + ?Sized>(
    t: &mut Tracker<'_, O>,
    x0: &[f64],
    cfg: &BfgsConfig,
    stop: &StopConfig,
) -> OptOutcome {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g, mut loss) = t.eval(&x);
    let mut h = identity(n);
    let mut scaled = false;
    let (mut fallbacks, mut resets) = (0, 0);
    let mut iters = 0;
    let reason;
    if !finite(f, &g) {
        reason = StopReason::Aborted("non-finite objective at the starting point".into());
        return finish(t, x, f, loss, iters, reason, fallbacks, resets);
    }
    t.record(0, loss, &g, f);
    loop {
        if let Some(r) = t.converged(stop, &g) {
            reason = r;
            break;
        }
        if iters >= stop.max_iters {
            reason = StopReason::MaxIters;
            break;
        }
        let mut d = mat_vec_neg(&h, &g, n);
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) {
            h = identity(n);
            scaled = false;
            resets += 1;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&d, &g);
        }
        let a0 = if scaled { 1.0 } else { (1.0 / norm_inf(&g)).min(1.0) };
        let next = match line_search(t, &x, f, slope, &d, a0, cfg) {
            Search::Found(p) => Some((p, false)),
            Search::Aborted => None,
            Search::Failed => {
                fallbacks += 1;
                let gd: Vec<f64> = g.iter().map(|v| -v).collect();
                let s = -dot(&gd, &g);
                match backtrack(t, &x, f, s, &gd, a0, cfg.c1) {
                    Search::Found(p) => Some((p, true)),
                    Search::Aborted => None,
                    Search::Failed => {
                        log::debug!(
                            "bfgs stalled at iteration {iters}: f = {f:e}, |g|inf = {:e}, a0 = {a0:e}",
                            norm_inf(&g)
                        );
                        reason = StopReason::Stalled;
                        break;
                    }
                }
            }
        };
        let Some((p, was_fallback)) = next else {
            reason = StopReason::Aborted(format!("non-finite objective at iteration {iters}"));
            break;
        };
        iters += 1;
        let s: Vec<f64> = d.iter().map(|di| p.a * di).collect();
        let y: Vec<f64> = p.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        x.iter_mut().zip(&s).for_each(|(xi, si)| *xi += si);
        f = p.f;
        g = p.g;
        loss = p.loss;
        t.record(iters, loss, &g, f);
        if was_fallback || !(sy > 1e-12 * norm2(&s) * norm2(&y)) {
            h = identity(n);
            scaled = false;
            resets += 1;
            continue;
        }
        if !scaled {
            let gamma = sy / dot(&y, &y);
            for i in 0..n {
                h[i * n + i] = gamma;
            }
            scaled = true;
        }
        update_inverse_hessian(&mut h, &s, &y, sy, n);
    }
    finish(t, x, f, loss, iters, reason, fallbacks, resets)
}

#[allow(clippy::too_many_arguments)]
fn finish<O: Objective + ?Sized>(
    t: &mut Tracker<'_, O>,
    x: Vec<f64>,
    f: f64,
    loss: f64,
    iters: usize,
    reason: StopReason,
    fallbacks: usize,
    resets: usize,
) -> OptOutcome {
    OptOutcome {
        x,
        loss,
        objective: f,
        iters,
        evaluations: t.evaluations,
        trace: std::mem::take(&mut t.trace),
        stop: reason,
        gd_fallbacks: fallbacks,
        hessian_resets: resets,
    }
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn mat_vec_neg(h: &[f64], g: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], g)).collect()
}

/// `H ← (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ`, `ρ = 1/(yᵀs)`.
fn update_inverse_hessian(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    let c = (1.0 + rho * yhy) * rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += c * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
    // Keep exact symmetry against rounding drift.
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (h[i * n + j] + h[j * n + i]);
            h[i * n + j] = m;
            h[j * n + i] = m;
        }
    }
}

fn probe<O: Objective + ?Sized>(
    t: &mut Tracker<'_, O>,
    x: &[f64],
    d: &[f64],
    a: f64,
) -> Option<Point1> {
    let xa: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + a * di).collect();
    let (f, g, loss) = t.eval(&xa);
    if !finite(f, &g) {
        return None;
    }
    let dd = dot(&g, d);
    Some(Point1 {
        a,
        f,
        d: dd,
        g,
        loss,
    })
}

/// Minimizer of the cubic interpolating two points with slopes, safeguarded
/// to the middle of the bracket.
fn interpolate(lo: &Point1, hi: &Point1) -> f64 {
    let (a0, a1) = (lo.a, hi.a);
    let d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (a0 - a1);
    let disc = d1 * d1 - lo.d * hi.d;
    let mut a = f64::NAN;
    if disc >= 0.0 {
        let d2 = (a1 - a0).signum() * disc.sqrt();
        a = a1 - (a1 - a0) * (hi.d + d2 - d1) / (hi.d - lo.d + 2.0 * d2);
    }
    let (l, r) = (a0.min(a1), a0.max(a1));
    let margin = 0.1 * (r - l);
    if !a.is_finite() || a < l + margin || a > r - margin {
        a = 0.5 * (l + r);
    }
    a
}

/// Strong-Wolfe line search (bracketing then zoom).
fn line_search<O: Objective + ?Sized>(
    t: &mut Tracker<'_, O>,
    x: &[f64],
    f0: f64,
    d0: f64,
    d: &[f64],
    a_init: f64,
    cfg: &BfgsConfig,
) -> Search {
    let mut trials = 0;
    let mut prev = Point1 {
        a: 0.0,
        f: f0,
        d: d0,
        g: Vec::new(),
        loss: f64::NAN,
    };
    let mut a = a_init;
    let armijo = |p: &Point1| p.f <= f0 + cfg.c1 * p.a * d0;
    let curvature = |p: &Point1| p.d.abs() <= -cfg.c2 * d0;
    let (mut lo, mut hi);
    loop {
        if trials >= cfg.max_trials {
            return Search::Failed;
        }
        trials += 1;
        let Some(cur) = probe(t, x, d, a) else {
            return Search::Aborted;
        };
        if !armijo(&cur) || (trials > 1 && cur.f >= prev.f) {
            lo = prev;
            hi = cur;
            break;
        }
        if curvature(&cur) {
            return Search::Found(cur);
        }
        if cur.d >= 0.0 {
            lo = cur;
            hi = prev;
            break;
        }
        a = 2.0 * cur.a;
        prev = cur;
    }
    // zoom: lo satisfies Armijo with the lowest value seen; hi brackets.
    loop {
        if trials >= cfg.max_trials || (hi.a - lo.a).abs() <= 1e-16 * lo.a.abs().max(1e-300) {
            return if lo.a > 0.0 && lo.f < f0 {
                Search::Found(lo)
            } else {
                Search::Failed
            };
        }
        trials += 1;
        let aj = interpolate(&lo, &hi);
        let Some(cur) = probe(t, x, d, aj) else {
            return Search::Aborted;
        };
        if !armijo(&cur) || cur.f >= lo.f {
            hi = cur;
        } else {
            if curvature(&cur) {
                return Search::Found(cur);
            }
            if cur.d * (hi.a - lo.a) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
}

/// Armijo backtracking along `d`, halving from `a_init` up to 60 times.
fn backtrack<O: Objective + ?Sized>(
    t: &mut Tracker<'_, O>,
    x: &[f64],
    f0: f64,
    d0: f64,
    d: &[f64],
    a_init: f64,
    c1: f64,
) -> Search {
    let mut a = a_init;
    for _ in 0..60 {
        let Some(p) = probe(t, x, d, a) else {
            return Search::Aborted;
        };
        if p.f <= f0 + c1 * a * d0 && p.f < f0 {
            return Search::Found(p);
        }
        a *= 0.5;
    }
    Search::Failed
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Bowl(Vec<f64>);

    impl Objective for Bowl {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn eval(&self, x: &[f64]) -> (f64, Vec<f64>, f64) {
            let f: f64 = x.iter().zip(&self.0).map(|(a, b)| (a - b) * (a - b)).sum();
            let g = x.iter().zip(&self.0).map(|(a, b)| 2.0 * (a - b)).collect();
            (f, g, f.sqrt())
        }
    }

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, x: &[f64]) -> (f64, Vec<f64>, f64) {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            (f, g, f)
        }
    }

    #[test]
    fn bfgs_solves_quadratic_bowl() {
        let target: Vec<f64> = (0..8).map(|i| i as f64 * 0.7 - 2.0).collect();
        let bowl = Bowl(target.clone());
        let out = minimize(&bowl, &[0.0; 8], &Optimizer::Bfgs(BfgsConfig::default()), &StopConfig::default());
        assert!(out.iters <= 16, "{}", out.iters);
        for (a, b) in out.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn bfgs_is_monotone_on_rosenbrock() {
        let stop = StopConfig {
            max_iters: 500,
            ..Default::default()
        };
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], &Optimizer::Bfgs(BfgsConfig::default()), &stop);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6, "{:?}", out.x);
        for w in out.trace.windows(2) {
            assert!(w[1].loss <= w[0].loss);
        }
    }

    #[test]
    fn adam_is_reproducible_and_descends() {
        let bowl = Bowl(vec![1.0, -1.0, 0.5]);
        let opt = Optimizer::Adam(AdamConfig {
            step: 1e-2,
            ..Default::default()
        });
        let stop = StopConfig {
            max_iters: 3000,
            ..Default::default()
        };
        let a = minimize(&bowl, &[0.0; 3], &opt, &stop);
        let b = minimize(&bowl, &[0.0; 3], &opt, &stop);
        assert_eq!(a.x, b.x);
        assert!(a.objective < 1e-6);
    }

    #[test]
    fn non_finite_objective_aborts() {
        struct Bad;
        impl Objective for Bad {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, x: &[f64]) -> (f64, Vec<f64>, f64) {
                if x[0] > 0.5 {
                    (f64::NAN, vec![f64::NAN], f64::NAN)
                } else {
                    (-x[0], vec![-1.0], -x[0])
                }
            }
        }
        let out = minimize(&Bad, &[0.0], &Optimizer::Adam(AdamConfig { step: 0.2, ..Default::default() }), &StopConfig::default());
        assert!(matches!(out.stop, StopReason::Aborted(_)));
        assert!(out.x[0] <= 0.5);
    }
}
