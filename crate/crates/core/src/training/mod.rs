//! PINNs and RVPINNs losses, optimizers and the damping continuation driver.

mod continuation;
mod loss;
mod optim;
mod verify;

use thiserror::Error;

use crate::galerkin::GalerkinError;
use crate::network::{NetParams, NetworkError};
use crate::quadrature::QuadError;
use crate::transfer::TransferError;

pub use continuation::{continuation, ContinuationReport, StageReport};
pub use loss::{Loss, LossEval, LossKind, LossSpec};
pub use optim::{
    minimize, AdamConfig, BfgsConfig, Objective, OptOutcome, Optimizer, StopConfig, StopReason,
    TraceEntry,
};
pub use verify::{exact_loss_rule, sup_form_check, SupCheck};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("invalid loss specification: {0}")]
    InvalidSpec(String),
    #[error("invalid continuation schedule: {0}")]
    Schedule(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Galerkin(#[from] GalerkinError),
}

/// The squared loss as a function of the flat parameter vector.
pub struct NetObjective<'a> {
    loss: &'a Loss,
    template: NetParams,
}

impl<'a> NetObjective<'a> {
    pub fn new(loss: &'a Loss, template: &NetParams) -> Self {
        NetObjective {
            loss,
            template: template.clone(),
        }
    }
}

impl Objective for NetObjective<'_> {
    fn dim(&self) -> usize {
        self.template.n_params()
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>, f64) {
        let mut p = self.template.clone();
        if p.set_flat(x).is_err() {
            return (f64::NAN, vec![f64::NAN; x.len()], f64::NAN);
        }
        let ev = self.loss.evaluate(&p);
        (ev.objective, ev.grad, ev.loss)
    }
}

/// Trained parameters with the optimizer record.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: NetParams,
    pub outcome: OptOutcome,
}

/// Minimizes `loss²` over all network parameters starting from `params0`.
pub fn train(loss: &Loss, params0: &NetParams, opt: &Optimizer, stop: &StopConfig) -> TrainResult {
    let obj = NetObjective::new(loss, params0);
    let outcome = minimize(&obj, &params0.to_flat(), opt, stop);
    let mut params = params0.clone();
    params
        .set_flat(&outcome.x)
        .expect("optimizer preserves the parameter count");
    TrainResult { params, outcome }
}
