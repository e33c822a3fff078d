//! Experiment harness for the `pfseries` CLI: configuration, drivers for the
//! tent, boundary-map and standard-map studies, error metrics, EOC tables and
//! CSV/JSON output.

// `!(x > 0.0)` is deliberate: NaN must fail every validity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod criteria;
pub mod experiments;
pub mod metrics;
pub mod report;

use thiserror::Error;

pub use config::ExperimentConfig;
pub use report::RunReport;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invariant check failed: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Numerical(_) => 3,
            BenchError::Invariant(_) => 4,
            BenchError::Io(_) => 1,
        }
    }
}

macro_rules! numerical_from {
    ($($t:ty),*) => {
        $(impl From<$t> for BenchError {
            fn from(e: $t) -> Self {
                BenchError::Numerical(e.to_string())
            }
        })*
    };
}

numerical_from!(
    pfseries_core::transfer::TransferError,
    pfseries_core::quadrature::QuadError,
    pfseries_core::galerkin::GalerkinError,
    pfseries_core::network::NetworkError,
    pfseries_core::training::TrainError,
    pfseries_core::maps::MapError
);

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for BenchError {
    fn from(e: serde_json::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}
