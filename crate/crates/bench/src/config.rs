//! Experiment configuration: one TOML file per run. Every section and key is
//! optional; unknown keys are rejected.

use std::path::Path;

use pfseries_core::maps::{MapDescriptor, MapKind, DEFAULT_K};
use pfseries_core::training::{AdamConfig, BfgsConfig, Optimizer, StopConfig};
use pfseries_core::transfer::{FormPath, ProblemCase};
use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub series: SeriesConfig,
    pub quad: QuadConfig,
    pub galerkin: GalerkinConfig,
    pub net: NetConfig,
    pub train: TrainConfig,
    pub sweep: SweepConfig,
    pub quad_study: QuadStudyConfig,
    pub check: CheckConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    /// "tent" | "circle_boundary" | "standard_map".
    pub map: String,
    /// "smooth_exp" | "singular" | "circle_f0" | "standard_f0" | "constant".
    pub case: String,
    pub alpha: f64,
    pub p: f64,
    pub k_param: f64,
    /// Value of `f0` for the "constant" case.
    pub constant: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            map: "tent".into(),
            case: "smooth_exp".into(),
            alpha: 0.5,
            p: 2.0,
            k_param: DEFAULT_K,
            constant: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesConfig {
    pub n_terms: usize,
    pub direct_max_terms: usize,
    pub grid_points: usize,
    pub max_cost_per_point: f64,
    /// Output samples per axis.
    pub samples_per_dim: usize,
    /// Tail tolerance for the certified reference `a^{N+1}‖f0‖/(1-a) < tol`.
    pub reference_tol: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            n_terms: 20,
            direct_max_terms: 25,
            grid_points: 10_000,
            max_cost_per_point: 1e8,
            samples_per_dim: 101,
            reference_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    /// Training and assembly rule.
    pub rule: RuleChoice,
    /// Gauss points per axis for `rule = "gauss"`.
    pub n_per_dim: usize,
    /// Smallest panel of the graded rule.
    pub graded_min_width: f64,
    /// Gauss points per panel of the graded rule.
    pub graded_points_per_panel: usize,
    pub adaptive_tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rule: RuleChoice::Gauss,
            n_per_dim: 101,
            graded_min_width: 1e-10,
            graded_points_per_panel: 4,
            adaptive_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleChoice {
    /// Tensor Gauss-Legendre.
    Gauss,
    /// 1D composite Gauss on panels halving toward the left end, for data
    /// singular there.
    Graded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisChoice {
    Hat,
    Indicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UlamChoice {
    /// Koopman-form quadrature on the cell-aligned rule.
    Quadrature,
    /// Exact preimage intervals (tent map only).
    Exact,
    /// Seeded Monte-Carlo sampling.
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GalerkinConfig {
    /// Hat in 1D, indicator in 2D when unset.
    pub basis: Option<BasisChoice>,
    pub cells_per_dim: usize,
    pub ulam: UlamChoice,
    pub ulam_samples: usize,
    pub seed: u64,
}

impl Default for GalerkinConfig {
    fn default() -> Self {
        GalerkinConfig {
            basis: None,
            cells_per_dim: 32,
            ulam: UlamChoice::Quadrature,
            ulam_samples: 100_000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitChoice {
    Uniform,
    Geometric,
    Random2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub n_hidden: usize,
    /// Defaults to "uniform" in 1D and "random2d" in 2D.
    pub init: Option<InitChoice>,
    pub r: f64,
    pub seed: u64,
    /// Least-squares fit of the outer layer before training.
    pub fit_outer: bool,
    /// Independent random inits (seeds `seed`, `seed + 1`, ...); the run
    /// with the lowest loss is kept. Needs the "random2d" init.
    pub restarts: usize,
    /// Iterations per restart before the selection; 0 trains every restart
    /// for the full budget.
    pub screen_iters: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            n_hidden: 32,
            init: None,
            r: 0.662,
            seed: 0,
            fit_outer: true,
            restarts: 1,
            screen_iters: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerChoice {
    Adam,
    Bfgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Defaults to "bfgs" in 1D and "adam" in 2D.
    pub optimizer: Option<OptimizerChoice>,
    /// Defaults to 2000 for BFGS and 20000 for Adam (per continuation stage).
    pub max_iters: Option<usize>,
    pub grad_tol: f64,
    pub loss_tol: f64,
    pub adam: AdamConfig,
    pub bfgs: BfgsConfig,
    /// Strictly increasing dampings ending at `problem.alpha`; empty = none.
    pub continuation_alphas: Vec<f64>,
    /// "pf" | "koopman" evaluation of the RVPINNs forms.
    pub rvpinns_path: FormPath,
    /// RVPINNs test cells per axis.
    pub test_cells_per_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: None,
            max_iters: None,
            grad_tol: 1e-9,
            loss_tol: 1e-12,
            adam: AdamConfig::default(),
            bfgs: BfgsConfig::default(),
            continuation_alphas: Vec::new(),
            rvpinns_path: FormPath::Pf,
            test_cells_per_dim: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    Galerkin,
    Pinns,
    Rvpinns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub method: Method,
    pub ns: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            method: Method::Pinns,
            ns: vec![4, 8, 16, 32],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadStudyConfig {
    pub q_points: Vec<usize>,
}

impl Default for QuadStudyConfig {
    fn default() -> Self {
        QuadStudyConfig {
            q_points: vec![11, 31, 101, 301],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    /// Skip the training-based criteria (1, 3, 10), which take minutes.
    pub skip_training: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, BenchError> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn map_kind(&self) -> Result<MapKind, BenchError> {
        self.problem
            .map
            .parse()
            .map_err(|e: pfseries_core::maps::MapError| BenchError::Config(e.to_string()))
    }

    pub fn map(&self) -> Result<MapDescriptor, BenchError> {
        Ok(MapDescriptor::from_kind(self.map_kind()?, Some(self.problem.k_param)))
    }

    pub fn case(&self) -> Result<ProblemCase, BenchError> {
        let case: ProblemCase = self
            .problem
            .case
            .parse()
            .map_err(|e: pfseries_core::transfer::TransferError| BenchError::Config(e.to_string()))?;
        Ok(match case {
            ProblemCase::Constant(_) => ProblemCase::Constant(self.problem.constant),
            c => c,
        })
    }

    pub fn dim(&self) -> usize {
        self.map().map(|m| m.dim()).unwrap_or(1)
    }

    pub fn basis(&self) -> BasisChoice {
        self.galerkin.basis.unwrap_or(if self.dim() == 1 {
            BasisChoice::Hat
        } else {
            BasisChoice::Indicator
        })
    }

    pub fn init(&self) -> InitChoice {
        self.net.init.unwrap_or(if self.dim() == 1 {
            InitChoice::Uniform
        } else {
            InitChoice::Random2d
        })
    }

    pub fn optimizer(&self) -> Optimizer {
        let choice = self.train.optimizer.unwrap_or(if self.dim() == 1 {
            OptimizerChoice::Bfgs
        } else {
            OptimizerChoice::Adam
        });
        match choice {
            OptimizerChoice::Adam => Optimizer::Adam(self.train.adam),
            OptimizerChoice::Bfgs => Optimizer::Bfgs(self.train.bfgs),
        }
    }

    pub fn stop(&self) -> StopConfig {
        let default_iters = match self.optimizer() {
            Optimizer::Adam(_) => 20_000,
            Optimizer::Bfgs(_) => 2_000,
        };
        StopConfig {
            max_iters: self.train.max_iters.unwrap_or(default_iters),
            grad_tol: self.train.grad_tol,
            loss_tol: self.train.loss_tol,
            ..StopConfig::default()
        }
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<(), BenchError> {
        let err = |m: String| Err(BenchError::Config(m));
        let map = self.map()?;
        let case = self.case()?;
        if let Some(native) = case.native_map() {
            if native != map.kind {
                return err(format!(
                    "problem.case = \"{}\" belongs to map \"{}\", not \"{}\"",
                    self.problem.case, native, map.kind
                ));
            }
        }
        let p = &self.problem;
        if !(p.alpha > 0.0 && p.alpha < 1.0) {
            return err(format!("problem.alpha = {} must lie in (0, 1)", p.alpha));
        }
        if !(p.p > 1.0 && p.p.is_finite()) {
            return err(format!("problem.p = {} must exceed 1", p.p));
        }
        if !p.k_param.is_finite() {
            return err("problem.k_param must be finite".into());
        }
        if self.quad.n_per_dim < 2 {
            return err(format!("quad.n_per_dim = {} must be at least 2", self.quad.n_per_dim));
        }
        if self.quad.rule == RuleChoice::Graded {
            if map.dim() != 1 {
                return err("quad.rule = \"graded\" is one-dimensional".into());
            }
            let w = self.quad.graded_min_width;
            if !(w > 0.0 && w < 1.0) || self.quad.graded_points_per_panel == 0 {
                return err("graded rule needs 0 < graded_min_width < 1 and points per panel > 0".into());
            }
        }
        if !(self.quad.adaptive_tol > 0.0) {
            return err("quad.adaptive_tol must be positive".into());
        }
        if !(self.series.reference_tol > 0.0) {
            return err("series.reference_tol must be positive".into());
        }
        if self.series.samples_per_dim < 2 {
            return err("series.samples_per_dim must be at least 2".into());
        }
        if self.galerkin.cells_per_dim == 0 {
            return err("galerkin.cells_per_dim must be positive".into());
        }
        if self.basis() == BasisChoice::Hat && map.dim() != 1 {
            return err("galerkin.basis = \"hat\" is one-dimensional".into());
        }
        if self.galerkin.ulam == UlamChoice::Exact && map.kind != MapKind::Tent {
            return err("galerkin.ulam = \"exact\" needs the tent map".into());
        }
        if self.galerkin.ulam == UlamChoice::MonteCarlo && self.galerkin.ulam_samples < 100 {
            return err("galerkin.ulam_samples must be at least 100".into());
        }
        if self.net.restarts == 0 {
            return err("net.restarts must be at least 1".into());
        }
        if self.net.restarts > 1 && self.init() != InitChoice::Random2d {
            return err("net.restarts > 1 needs a random init (\"random2d\")".into());
        }
        if self.net.restarts > 1 && !self.train.continuation_alphas.is_empty() {
            return err("net.restarts > 1 cannot be combined with a continuation schedule".into());
        }
        if self.net.n_hidden == 0 {
            return err("net.n_hidden must be positive".into());
        }
        if !(self.net.r > 0.0 && self.net.r < 1.0) {
            return err(format!("net.r = {} must lie in (0, 1)", self.net.r));
        }
        match (self.init(), map.dim()) {
            (InitChoice::Random2d, 1) => return err("net.init = \"random2d\" needs a 2D map".into()),
            (InitChoice::Uniform | InitChoice::Geometric, 2) => {
                return err("1D breakpoint initializations need the tent map".into())
            }
            _ => {}
        }
        let a = &self.train.continuation_alphas;
        if !a.is_empty() {
            if a.iter().any(|x| !(*x > 0.0 && *x < 1.0)) || a.windows(2).any(|w| w[1] <= w[0]) {
                return err("train.continuation_alphas must increase strictly inside (0, 1)".into());
            }
            if (a[a.len() - 1] - p.alpha).abs() > 1e-15 {
                return err("train.continuation_alphas must end at problem.alpha".into());
            }
        }
        if self.train.test_cells_per_dim == 0 {
            return err("train.test_cells_per_dim must be positive".into());
        }
        let ad = &self.train.adam;
        if !(ad.step > 0.0 && (0.0..1.0).contains(&ad.beta1) && (0.0..1.0).contains(&ad.beta2) && ad.eps > 0.0) {
            return err("train.adam needs step > 0, 0 <= beta < 1, eps > 0".into());
        }
        let bf = &self.train.bfgs;
        if !(0.0 < bf.c1 && bf.c1 < bf.c2 && bf.c2 < 1.0) || bf.max_trials == 0 {
            return err("train.bfgs needs 0 < c1 < c2 < 1 and max_trials > 0".into());
        }
        if self.sweep.ns.is_empty() || self.sweep.ns.windows(2).any(|w| w[1] <= w[0]) || self.sweep.ns[0] == 0 {
            return err("sweep.ns must be a nonempty increasing list of positive sizes".into());
        }
        if self.quad_study.q_points.iter().any(|&q| q < 2) {
            return err("quad_study.q_points must all be at least 2".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.quad.n_per_dim, 101);
        assert_eq!(c.stop().max_iters, 2000);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("[problem]\nalpah = 0.5\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[nope]\n").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("[problem]\nalpha = 1.0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[problem]\nmap = \"circle_boundary\"\n").is_err());
        assert!(ExperimentConfig::from_toml_str(
            "[problem]\nalpha = 0.9\n[train]\ncontinuation_alphas = [0.5, 0.3, 0.9]\n"
        )
        .is_err());
    }

    #[test]
    fn planar_defaults() {
        let c = ExperimentConfig::from_toml_str(
            "[problem]\nmap = \"standard_map\"\ncase = \"standard_f0\"\n",
        )
        .unwrap();
        assert_eq!(c.init(), InitChoice::Random2d);
        assert!(matches!(c.optimizer(), Optimizer::Adam(_)));
        assert_eq!(c.stop().max_iters, 20_000);
    }
}
