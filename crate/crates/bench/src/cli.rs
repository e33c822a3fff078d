//! `pfseries <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]`

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{ExperimentConfig, Method};
use crate::criteria::run_all;
use crate::experiments::{eoc_sweep, quad_study, run_method, Setup};
use crate::report::{write_csv, write_trace, RunReport};
use crate::BenchError;

#[derive(Debug, Parser)]
#[command(name = "pfseries", version, about = "Damped Perron-Frobenius series solvers and experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random draw (overrides net.seed and galerkin.seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for quadrature and assembly.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Truncated power series with `series.n_terms` terms.
    Series,
    /// Fixed-grid Galerkin or Ulam solve on `galerkin.cells_per_dim` cells.
    Galerkin,
    /// Strong-form residual training.
    Pinns,
    /// Variational residual training.
    Rvpinns,
    /// `sweep.method` over `sweep.ns` with an EOC table.
    EocSweep,
    /// Loss discrepancy over `quad_study.q_points`.
    QuadStudy,
    /// The acceptance suite; exits with code 4 if any criterion fails.
    Check,
}

impl Command {
    pub fn id(&self) -> &'static str {
        match self {
            Command::Series => "series",
            Command::Galerkin => "galerkin",
            Command::Pinns => "pinns",
            Command::Rvpinns => "rvpinns",
            Command::EocSweep => "eoc-sweep",
            Command::QuadStudy => "quad-study",
            Command::Check => "check",
        }
    }
}

/// Loads the config (defaults when no file is given) and applies overrides.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.net.seed = s;
        cfg.galerkin.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Sample {
    x: f64,
    y: Option<f64>,
    value: f64,
}

fn write_samples(path: &Path, setup: &Setup, field: &pfseries_core::ScalarField) -> Result<(), BenchError> {
    let d = setup.prob.map.domain;
    let n = setup.cfg.series.samples_per_dim;
    // Midpoints, so periodic and singular ends are never sampled.
    let at = |axis: usize, i: usize| d.lo(axis) + d.width(axis) * (i as f64 + 0.5) / n as f64;
    let mut rows = Vec::new();
    if d.dim() == 1 {
        for i in 0..n {
            let x = at(0, i);
            rows.push(Sample { x, y: None, value: field.eval(&[x, 0.0]) });
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (at(0, i), at(1, j));
                rows.push(Sample { x, y: Some(y), value: field.eval(&[x, y]) });
            }
        }
    }
    write_csv(path, &rows)
}

/// Executes one subcommand and writes its artifacts.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<RunReport, BenchError> {
    let t0 = Instant::now();
    let out = PathBuf::from(&cfg.output.dir);
    let mut report = RunReport::new(command.id(), cfg);
    match command {
        Command::Series | Command::Galerkin | Command::Pinns | Command::Rvpinns => {
            let setup = Setup::new(cfg)?;
            let reference = setup.reference()?;
            let (method, size) = match command {
                Command::Series => (Method::Series, cfg.series.n_terms),
                Command::Galerkin => (Method::Galerkin, cfg.galerkin.cells_per_dim),
                Command::Pinns => (Method::Pinns, cfg.net.n_hidden),
                _ => (Method::Rvpinns, cfg.net.n_hidden),
            };
            let run = run_method(&setup, method, size, Some(&reference))?;
            report.final_loss = Some(run.final_loss);
            report.l2_error = run.l2_error;
            report.reference = Some(reference.info);
            report.iters = Some(run.iters);
            report.stages = run.stages.clone();
            if !run.trace.is_empty() {
                let p = out.join(format!("{}_trace.csv", command.id()));
                write_trace(&p, &run.trace)?;
                report.trace_path = Some(p.to_string_lossy().into_owned());
            }
            write_samples(&out.join(format!("{}_field.csv", command.id())), &setup, &run.field)?;
        }
        Command::EocSweep => {
            let sweep = eoc_sweep(&Setup::new(cfg)?)?;
            write_csv(&out.join("eoc-sweep.csv"), &sweep.rows)?;
            report.reference = Some(sweep.reference.clone());
            report.sweep = Some(sweep);
        }
        Command::QuadStudy => {
            let study = quad_study(&Setup::new(cfg)?)?;
            write_csv(&out.join("quad-study.csv"), &study.rows)?;
            report.quad_study = Some(study);
        }
        Command::Check => {
            let results = run_all(cfg.check.skip_training);
            for r in &results {
                println!("{}", r.line());
            }
            report.checks = results;
        }
    }
    report.wall_ms = t0.elapsed().as_secs_f64() * 1e3;
    let path = report.write(&out)?;
    log::info!("report written to {}", path.display());
    if let Some(bad) = report.checks.iter().find(|c| !c.passed) {
        return Err(BenchError::Invariant(format!("criterion {} ({}) failed", bad.id, bad.name)));
    }
    Ok(report)
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = (|| {
        let cfg = load_config(&cli)?;
        if let Some(n) = cli.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| BenchError::Config(format!("--threads: {e}")))?;
        }
        run(cli.command, &cfg)
    })();
    match result {
        Ok(r) => {
            if let Some(l) = r.final_loss {
                println!("final loss {l:.6e}");
            }
            if let Some(e) = r.l2_error {
                println!("L2 error   {e:.6e}");
            }
            if let Some(s) = &r.sweep {
                for row in &s.rows {
                    println!("n = {:>4}  L2 error {:.6e}", row.n, row.l2_error);
                }
                if let Some(slope) = s.slope {
                    println!("log-log slope {slope:.4}");
                }
            }
            0
        }
        Err(e) => {
            eprintln!("pfseries: {e}");
            e.exit_code()
        }
    }
}
