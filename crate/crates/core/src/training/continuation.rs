use serde::Serialize;

use super::{train, Loss, OptOutcome, Optimizer, StopConfig, StopReason, TrainError};
use crate::network::NetParams;

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub alpha: f64,
    /// Loss of the warm-start parameters before training this stage.
    pub initial_loss: f64,
    pub outcome: OptOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationReport {
    pub stages: Vec<StageReport>,
    /// Parameters after the last completed stage.
    pub params: NetParams,
    /// Set when a stage failed; the completed stages are kept.
    pub failure: Option<String>,
}

impl ContinuationReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.stages.last().map(|s| s.outcome.loss)
    }

    pub fn total_iters(&self) -> usize {
        self.stages.iter().map(|s| s.outcome.iters).sum()
    }
}

/// Trains at each damping in turn, warm-starting every stage from the
/// previous one. `make_loss(a)` builds the loss at damping `a`.
pub fn continuation<F>(
    alphas: &[f64],
    params0: &NetParams,
    mut make_loss: F,
    opt: &Optimizer,
    stop: &StopConfig,
) -> Result<ContinuationReport, TrainError>
where
    F: FnMut(f64) -> Result<Loss, TrainError>,
{
    if alphas.is_empty() {
        return Err(TrainError::Schedule("no damping values given".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(TrainError::Schedule(format!("damping {a} is outside (0, 1)")));
    }
    if alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TrainError::Schedule("dampings must increase strictly".into()));
    }
    let mut report = ContinuationReport {
        stages: Vec::new(),
        params: params0.clone(),
        failure: None,
    };
    for &alpha in alphas {
        let loss = match make_loss(alpha) {
            Ok(l) => l,
            Err(e) => {
                report.failure = Some(format!("stage a = {alpha}: {e}"));
                break;
            }
        };
        let initial_loss = loss.value(&report.params);
        let res = train(&loss, &report.params, opt, stop);
        let aborted = matches!(res.outcome.stop, StopReason::Aborted(_));
        if aborted {
            report.failure = Some(format!("stage a = {alpha}: {:?}", res.outcome.stop));
        } else {
            report.params = res.params;
        }
        report.stages.push(StageReport {
            alpha,
            initial_loss,
            outcome: res.outcome,
        });
        if aborted {
            break;
        }
    }
    Ok(report)
}
