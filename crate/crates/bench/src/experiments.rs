//! Drivers for single runs, size sweeps and the quadrature study.

use std::time::Instant;

use pfseries_core::galerkin::{
    assemble, assemble_from_ulam, galerkin_field, solve, ulam_matrix, Basis, Partition,
    UlamSampler,
};
use pfseries_core::network::{
    fit_outer, init_geometric_breakpoints, init_random_2d, init_uniform_breakpoints,
};
use pfseries_core::quadrature::{AdaptiveIntegrator, QuadRule};
use pfseries_core::training::{
    continuation, train, LossSpec, OptOutcome, StopConfig, StopReason, TraceEntry,
};
use pfseries_core::transfer::{residual, truncated_series, ProblemCase, SeriesOptions};
use pfseries_core::{DampedProblem, NetParams, ScalarField};
use serde::{Deserialize, Serialize};

use crate::config::{BasisChoice, ExperimentConfig, InitChoice, Method, RuleChoice, UlamChoice};
use crate::metrics::{
    eoc, error_rule_1d, error_rule_2d, l2_error, loglog_slope, reference_solution, Reference,
    ReferenceInfo,
};
use crate::BenchError;

/// A validated configuration together with the problem it describes.
pub struct Setup {
    pub cfg: ExperimentConfig,
    pub case: ProblemCase,
    pub prob: DampedProblem,
    pub exact: Option<ScalarField>,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, BenchError> {
        cfg.validate()?;
        let case = cfg.case()?;
        let (prob, exact) = Self::problem_at(cfg, cfg.problem.alpha)?;
        Ok(Setup {
            cfg: cfg.clone(),
            case,
            prob,
            exact,
        })
    }

    /// The configured problem at damping `alpha`; manufactured data are
    /// rebuilt for that damping.
    fn problem_at(
        cfg: &ExperimentConfig,
        alpha: f64,
    ) -> Result<(DampedProblem, Option<ScalarField>), BenchError> {
        let (prob, exact) = DampedProblem::from_case(cfg.map()?, cfg.case()?, alpha)?;
        Ok((prob.with_exponent(cfg.problem.p)?, exact))
    }

    pub fn at_alpha(&self, alpha: f64) -> Result<DampedProblem, BenchError> {
        Ok(Self::problem_at(&self.cfg, alpha)?.0)
    }

    pub fn dim(&self) -> usize {
        self.prob.map.dim()
    }

    fn singular(&self) -> bool {
        matches!(self.case, ProblemCase::Singular)
    }

    pub fn series_options(&self) -> SeriesOptions {
        let s = &self.cfg.series;
        SeriesOptions {
            direct_max_terms: s.direct_max_terms,
            grid_points: s.grid_points,
            max_cost_per_point: s.max_cost_per_point,
        }
    }

    pub fn reference(&self) -> Result<Reference, BenchError> {
        reference_solution(
            &self.prob,
            self.exact.as_ref(),
            self.cfg.series.reference_tol,
            &self.series_options(),
        )
    }

    /// Training and assembly rule per `quad.rule`.
    pub fn train_rule(&self) -> Result<QuadRule, BenchError> {
        let q = &self.cfg.quad;
        let d = &self.prob.map.domain;
        Ok(match q.rule {
            RuleChoice::Gauss => QuadRule::gauss(d, q.n_per_dim)?,
            RuleChoice::Graded => {
                QuadRule::graded_1d(d, &[], q.graded_min_width, q.graded_points_per_panel)?
            }
        })
    }

    /// Rule for error norms; `breaks` are 1D kinks of the integrand.
    pub fn error_rule(&self, breaks: &[f64]) -> Result<QuadRule, BenchError> {
        if self.dim() == 1 {
            error_rule_1d(&self.prob.map.domain, breaks, self.singular())
        } else {
            error_rule_2d(&self.prob.map.domain)
        }
    }
}

/// Kinks of `(I - aP)` applied to a function kinked at `ts` (tent map).
fn tent_residual_breaks(ts: &[f64]) -> Vec<f64> {
    let mut b = vec![0.5];
    for &t in ts {
        b.extend([t, 2.0 * t, 2.0 - 2.0 * t]);
    }
    b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub alpha: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iters: usize,
    pub stop: String,
}

/// Outcome of one solver run.
#[derive(Clone)]
pub struct MethodRun {
    pub method: Method,
    /// Series length, cells per axis, or hidden neurons.
    pub size: usize,
    pub field: ScalarField,
    /// Training loss for networks; `‖f0 - (I - aP)u‖_{L²}` otherwise.
    pub final_loss: f64,
    pub l2_error: Option<f64>,
    pub iters: usize,
    pub wall_ms: f64,
    pub trace: Vec<TraceEntry>,
    pub stages: Vec<StageSummary>,
    pub params: Option<NetParams>,
}

pub fn run_method(
    setup: &Setup,
    method: Method,
    size: usize,
    reference: Option<&Reference>,
) -> Result<MethodRun, BenchError> {
    match method {
        Method::Series => run_series(setup, size, reference),
        Method::Galerkin => run_galerkin(setup, size, reference),
        Method::Pinns | Method::Rvpinns => run_network(setup, method, size, reference),
    }
}

pub fn run_series(
    setup: &Setup,
    n_terms: usize,
    reference: Option<&Reference>,
) -> Result<MethodRun, BenchError> {
    let t0 = Instant::now();
    let field = truncated_series(&setup.prob, n_terms, &setup.series_options())?;
    // The residual of a partial sum is smooth for the tent map.
    let rule = if setup.dim() == 1 && !setup.singular() {
        QuadRule::gauss(&setup.prob.map.domain, setup.cfg.quad.n_per_dim.min(64))?
    } else {
        setup.error_rule(&[0.5])?
    };
    let final_loss = rule.l2_norm(&residual(&setup.prob, &field))?;
    let l2 = match reference {
        Some(r) => Some(l2_error(&field, &r.field, &rule)?),
        None => None,
    };
    Ok(MethodRun {
        method: Method::Series,
        size: n_terms,
        field,
        final_loss,
        l2_error: l2,
        iters: 0,
        wall_ms: elapsed_ms(t0),
        trace: Vec::new(),
        stages: Vec::new(),
        params: None,
    })
}

pub fn galerkin_basis(setup: &Setup, cells: usize) -> Result<Basis, BenchError> {
    let domain = setup.prob.map.domain;
    Ok(match setup.cfg.basis() {
        BasisChoice::Hat => Basis::hat(domain, cells)?,
        BasisChoice::Indicator => Basis::indicator(Partition::uniform(domain, cells)?),
    })
}

fn points_per_panel(total: usize, cells: usize) -> usize {
    total.div_ceil(cells).max(2)
}

pub fn run_galerkin(
    setup: &Setup,
    cells: usize,
    reference: Option<&Reference>,
) -> Result<MethodRun, BenchError> {
    let t0 = Instant::now();
    let g = &setup.cfg.galerkin;
    let prob = &setup.prob;
    let basis = galerkin_basis(setup, cells)?;
    let sys = match setup.cfg.basis() {
        BasisChoice::Hat => assemble(prob, &basis, &setup.train_rule()?)?,
        BasisChoice::Indicator => {
            let rule = basis
                .partition()
                .aligned_rule(points_per_panel(setup.cfg.quad.n_per_dim, cells))?;
            let sampler = match g.ulam {
                UlamChoice::Quadrature => None,
                UlamChoice::Exact => Some(UlamSampler::Exact),
                UlamChoice::MonteCarlo => Some(UlamSampler::MonteCarlo {
                    n_samples: g.ulam_samples,
                    seed: g.seed,
                }),
            };
            match sampler {
                None => assemble(prob, &basis, &rule)?,
                Some(s) => {
                    let p = ulam_matrix(&prob.map, basis.partition(), s)?;
                    assemble_from_ulam(prob, &basis, &p, &rule)?
                }
            }
        }
    };
    let coeffs = solve(&sys)?;
    let field = galerkin_field(&basis, &coeffs)?;
    let mut edges = basis.partition().breaks(0);
    if setup.dim() == 1 {
        edges.extend([0.0, 1.0]);
    }
    let err_rule = setup.error_rule(&edges)?;
    let res_rule = setup.error_rule(&tent_residual_breaks(&edges))?;
    let final_loss = res_rule.l2_norm(&residual(prob, &field))?;
    let l2 = match reference {
        Some(r) => Some(l2_error(&field, &r.field, &err_rule)?),
        None => None,
    };
    Ok(MethodRun {
        method: Method::Galerkin,
        size: cells,
        field,
        final_loss,
        l2_error: l2,
        iters: 0,
        wall_ms: elapsed_ms(t0),
        trace: Vec::new(),
        stages: Vec::new(),
        params: None,
    })
}

/// Inner-layer initialization per `net.init`, outer layer zero.
pub fn init_params(setup: &Setup, n_hidden: usize, seed: u64) -> Result<NetParams, BenchError> {
    let domain = setup.prob.map.domain;
    Ok(match setup.cfg.init() {
        InitChoice::Uniform => init_uniform_breakpoints(n_hidden, &domain)?,
        InitChoice::Geometric => init_geometric_breakpoints(n_hidden, setup.cfg.net.r, &domain)?,
        InitChoice::Random2d => init_random_2d(n_hidden, &domain, seed)?,
    })
}

/// PINNs: `L^p` loss on the training rule. RVPINNs: normalized indicators on
/// `train.test_cells_per_dim` cells per axis, integrated on the partition
/// with about `quad.n_per_dim` points per axis.
pub fn loss_spec(setup: &Setup, method: Method) -> Result<LossSpec, BenchError> {
    match method {
        Method::Pinns => Ok(LossSpec::pinns(setup.train_rule()?, setup.cfg.problem.p)?),
        Method::Rvpinns => {
            let cells = setup.cfg.train.test_cells_per_dim;
            let part = Partition::uniform(setup.prob.map.domain, cells)?;
            let rule = part.aligned_rule(points_per_panel(setup.cfg.quad.n_per_dim, cells))?;
            Ok(LossSpec::rvpinns(Basis::indicator(part), rule, setup.cfg.train.rvpinns_path)?)
        }
        m => Err(BenchError::Config(format!("{m:?} is not a network method"))),
    }
}

/// Initialization, optional outer-layer fit, then training (through the
/// continuation schedule when one is configured).
///
/// With `net.restarts > 1` every seed `seed, seed + 1, ...` is trained for
/// `net.screen_iters` iterations (the full budget when 0) and the run with
/// the lowest loss continues for the rest of the budget. The reference is
/// only used for the reported error, never for the selection.
pub fn run_network(
    setup: &Setup,
    method: Method,
    n_hidden: usize,
    reference: Option<&Reference>,
) -> Result<MethodRun, BenchError> {
    let t0 = Instant::now();
    let net = &setup.cfg.net;
    let budget = setup.cfg.stop().max_iters;
    let screen = if net.restarts > 1 && net.screen_iters > 0 {
        net.screen_iters.min(budget)
    } else {
        budget
    };
    let mut best: Option<MethodRun> = None;
    for r in 0..net.restarts {
        let seed = net.seed.wrapping_add(r as u64);
        let run = train_network(setup, method, start_params(setup, n_hidden, seed)?, screen)?;
        if net.restarts > 1 {
            log::info!("{method:?} n = {n_hidden}, seed {seed}: loss {:.6e}", run.final_loss);
        }
        if best.as_ref().is_none_or(|b| run.final_loss < b.final_loss) {
            best = Some(run);
        }
    }
    let mut run = best.expect("net.restarts >= 1");
    if screen < budget {
        let start = run.params.clone().expect("network runs keep their parameters");
        let more = train_network(setup, method, start, budget - screen)?;
        run = concat_runs(run, more);
    }
    if let Some(r) = reference {
        let params = run.params.as_ref().expect("network runs keep their parameters");
        let mut kinks = params.kinks_1d();
        if setup.dim() == 1 {
            kinks.extend([0.0, 1.0]);
        }
        run.l2_error = Some(l2_error(&run.field, &r.field, &setup.error_rule(&kinks)?)?);
    }
    run.wall_ms = elapsed_ms(t0);
    Ok(run)
}

fn start_params(setup: &Setup, n_hidden: usize, seed: u64) -> Result<NetParams, BenchError> {
    let params = init_params(setup, n_hidden, seed)?;
    if !setup.cfg.net.fit_outer {
        return Ok(params);
    }
    let alpha = setup.cfg.train.continuation_alphas.first().copied().unwrap_or(setup.cfg.problem.alpha);
    Ok(fit_outer(&params, &setup.at_alpha(alpha)?, &setup.train_rule()?)?)
}

/// `b` resumed from the end of `a`.
fn concat_runs(a: MethodRun, b: MethodRun) -> MethodRun {
    let (iter_off, ms_off) = (a.iters, a.trace.last().map_or(0.0, |e| e.wall_ms));
    let mut trace = a.trace;
    trace.extend(b.trace.iter().map(|e| TraceEntry {
        iter: e.iter + iter_off,
        wall_ms: e.wall_ms + ms_off,
        ..*e
    }));
    let mut stages = a.stages;
    stages.extend(b.stages);
    MethodRun {
        iters: a.iters + b.iters,
        wall_ms: a.wall_ms + b.wall_ms,
        trace,
        stages,
        ..b
    }
}

fn train_network(
    setup: &Setup,
    method: Method,
    params: NetParams,
    max_iters: usize,
) -> Result<MethodRun, BenchError> {
    let t0 = Instant::now();
    let cfg = &setup.cfg;
    let n_hidden = params.n_hidden();
    let alphas = if cfg.train.continuation_alphas.is_empty() {
        vec![cfg.problem.alpha]
    } else {
        cfg.train.continuation_alphas.clone()
    };
    let spec = loss_spec(setup, method)?;
    let opt = cfg.optimizer();
    let stop = StopConfig { max_iters, ..cfg.stop() };
    let report = if alphas.len() == 1 {
        let loss = spec.compile(&setup.prob)?;
        let initial_loss = loss.value(&params);
        let res = train(&loss, &params, &opt, &stop);
        check_outcome(&res.outcome)?;
        vec![(alphas[0], initial_loss, res.outcome, res.params)]
    } else {
        let rep = continuation(
            &alphas,
            &params,
            |a| {
                let p = setup.at_alpha(a).map_err(|e| {
                    pfseries_core::training::TrainError::InvalidSpec(e.to_string())
                })?;
                spec.compile(&p)
            },
            &opt,
            &stop,
        )?;
        if let Some(f) = rep.failure {
            return Err(BenchError::Numerical(f));
        }
        let n = rep.stages.len();
        rep.stages
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let p = if i + 1 == n { rep.params.clone() } else { params.clone() };
                (s.alpha, s.initial_loss, s.outcome, p)
            })
            .collect()
    };
    let mut trace = Vec::new();
    let mut stages = Vec::new();
    let (mut iter_off, mut ms_off) = (0usize, 0.0f64);
    for (alpha, initial_loss, outcome, _) in &report {
        for e in &outcome.trace {
            trace.push(TraceEntry {
                iter: e.iter + iter_off,
                wall_ms: e.wall_ms + ms_off,
                ..*e
            });
        }
        iter_off += outcome.iters;
        ms_off += outcome.trace.last().map_or(0.0, |e| e.wall_ms);
        stages.push(StageSummary {
            alpha: *alpha,
            initial_loss: *initial_loss,
            final_loss: outcome.loss,
            iters: outcome.iters,
            stop: format!("{:?}", outcome.stop),
        });
    }
    let (_, _, last, params) = report.into_iter().last().expect("at least one stage");
    Ok(MethodRun {
        method,
        size: n_hidden,
        field: params.to_field(),
        final_loss: last.loss,
        l2_error: None,
        iters: stages.iter().map(|s| s.iters).sum(),
        wall_ms: elapsed_ms(t0),
        trace,
        stages,
        params: Some(params),
    })
}

fn check_outcome(o: &OptOutcome) -> Result<(), BenchError> {
    match &o.stop {
        StopReason::Aborted(m) => Err(BenchError::Numerical(format!("training aborted: {m}"))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub l2_error: f64,
    pub final_loss: f64,
    pub iters: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EocRow {
    pub n_from: usize,
    pub n_to: usize,
    pub eoc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub method: Method,
    pub rows: Vec<SweepRow>,
    pub eoc: Vec<EocRow>,
    pub slope: Option<f64>,
    pub reference: ReferenceInfo,
}

/// Runs `sweep.method` at every size in `sweep.ns` against the reference.
pub fn eoc_sweep(setup: &Setup) -> Result<Sweep, BenchError> {
    let reference = setup.reference()?;
    let (method, ns) = (setup.cfg.sweep.method, setup.cfg.sweep.ns.clone());
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let run = run_method(setup, method, n, Some(&reference))?;
        log::info!("{method:?} n = {n}: L2 error {:?}", run.l2_error);
        rows.push(SweepRow {
            n,
            l2_error: run.l2_error.expect("reference given"),
            final_loss: run.final_loss,
            iters: run.iters,
            wall_ms: run.wall_ms,
        });
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
    let eoc_rows = eoc(&errors, &ns)?
        .into_iter()
        .enumerate()
        .map(|(i, e)| EocRow {
            n_from: ns[i],
            n_to: ns[i + 1],
            eoc: e,
        })
        .collect();
    Ok(Sweep {
        method,
        slope: loglog_slope(&ns, &errors),
        rows,
        eoc: eoc_rows,
        reference: reference.info,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadRow {
    pub q_points: usize,
    pub loss_value: f64,
    pub abs_discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadStudy {
    pub rows: Vec<QuadRow>,
    pub adaptive_loss: f64,
    pub adaptive_error: f64,
}

/// PINNs loss of a fixed network (`net.n_hidden` neurons, initialized and
/// outer-fitted but not trained) on Gauss rules with `q` points per axis,
/// against the adaptively integrated loss.
pub fn quad_study(setup: &Setup) -> Result<QuadStudy, BenchError> {
    let mut params = init_params(setup, setup.cfg.net.n_hidden, setup.cfg.net.seed)?;
    params = fit_outer(&params, &setup.prob, &setup.train_rule()?)?;
    let p = setup.cfg.problem.p;
    let r = residual(&setup.prob, &params.to_field());
    let integrand = ScalarField::analytic(move |x| r.eval(x).abs().powf(p));
    let ad = AdaptiveIntegrator::new(setup.cfg.quad.adaptive_tol)
        .integrate(&setup.prob.map.domain, &integrand)?;
    if !ad.tolerance_met {
        log::warn!("adaptive loss missed its tolerance (est. error {:e})", ad.est_error);
    }
    let adaptive_loss = ad.value.powf(1.0 / p);
    let rows = setup
        .cfg
        .quad_study
        .q_points
        .iter()
        .map(|&q| {
            let rule = QuadRule::gauss(&setup.prob.map.domain, q)?;
            let v = LossSpec::pinns(rule, p)?.compile(&setup.prob)?.value(&params);
            Ok(QuadRow {
                q_points: q,
                loss_value: v,
                abs_discrepancy: (v - adaptive_loss).abs(),
            })
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    Ok(QuadStudy {
        rows,
        adaptive_loss,
        adaptive_error: ad.est_error,
    })
}

fn elapsed_ms(t0: Instant) -> f64 {
    t0.elapsed().as_secs_f64() * 1e3
}
