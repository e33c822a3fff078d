//! The JSON run report and the CSV artifacts written next to it.

use std::fs;
use std::path::{Path, PathBuf};

use pfseries_core::training::TraceEntry;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::criteria::CriterionResult;
use crate::experiments::{QuadStudy, StageSummary, Sweep};
use crate::metrics::ReferenceInfo;
use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: ExperimentConfig,
    pub threads: usize,
    pub final_loss: Option<f64>,
    pub l2_error: Option<f64>,
    pub reference: Option<ReferenceInfo>,
    pub iters: Option<usize>,
    pub trace_path: Option<String>,
    pub stages: Vec<StageSummary>,
    pub sweep: Option<Sweep>,
    pub quad_study: Option<QuadStudy>,
    pub checks: Vec<CriterionResult>,
    pub wall_ms: f64,
}

impl RunReport {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        RunReport {
            command: command.into(),
            config: config.clone(),
            threads: rayon::current_num_threads(),
            final_loss: None,
            l2_error: None,
            reference: None,
            iters: None,
            trace_path: None,
            stages: Vec::new(),
            sweep: None,
            quad_study: None,
            checks: Vec::new(),
            wall_ms: 0.0,
        }
    }

    /// Every numeric field must be finite before the report is written.
    pub fn check_finite(&self) -> Result<(), BenchError> {
        let mut vals: Vec<(&str, f64)> = vec![("wall_ms", self.wall_ms)];
        vals.extend(self.final_loss.map(|v| ("final_loss", v)));
        vals.extend(self.l2_error.map(|v| ("l2_error", v)));
        if let Some(r) = &self.reference {
            vals.push(("reference.tail_bound", r.tail_bound));
        }
        for s in &self.stages {
            vals.extend([("stage.initial_loss", s.initial_loss), ("stage.final_loss", s.final_loss)]);
        }
        if let Some(s) = &self.sweep {
            for r in &s.rows {
                vals.extend([("sweep.l2_error", r.l2_error), ("sweep.final_loss", r.final_loss)]);
            }
            vals.extend(s.eoc.iter().filter_map(|e| e.eoc).map(|v| ("sweep.eoc", v)));
            vals.extend(s.slope.map(|v| ("sweep.slope", v)));
        }
        if let Some(q) = &self.quad_study {
            vals.push(("quad_study.adaptive_loss", q.adaptive_loss));
            for r in &q.rows {
                vals.extend([("quad_study.loss_value", r.loss_value)]);
            }
        }
        match vals.iter().find(|(_, v)| !v.is_finite()) {
            Some((name, v)) => Err(BenchError::Numerical(format!("report field {name} = {v}"))),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> Result<String, BenchError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, BenchError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, BenchError> {
        self.check_finite()?;
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}_report.json", self.command));
        fs::write(&path, self.to_json()?)?;
        Ok(path)
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BenchError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: iter, loss, grad_norm, wall_ms.
pub fn write_trace(path: &Path, trace: &[TraceEntry]) -> Result<(), BenchError> {
    write_csv(path, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{EocRow, QuadRow, SweepRow};
    use crate::config::Method;

    fn sample() -> RunReport {
        let mut r = RunReport::new("eoc-sweep", &ExperimentConfig::default());
        r.final_loss = Some(0.1 + 0.2);
        r.l2_error = Some(1.0 / 3.0);
        r.sweep = Some(Sweep {
            method: Method::Galerkin,
            rows: vec![SweepRow {
                n: 4,
                l2_error: std::f64::consts::PI * 1e-7,
                final_loss: 2.0f64.sqrt(),
                iters: 0,
                wall_ms: 1.25,
            }],
            eoc: vec![EocRow {
                n_from: 4,
                n_to: 8,
                eoc: None,
            }],
            slope: Some(-1.999_999_999_9),
            reference: ReferenceInfo {
                exact: false,
                n_terms: Some(20),
                tail_bound: 7.9e-7,
            },
        });
        r.quad_study = Some(QuadStudy {
            rows: vec![QuadRow {
                q_points: 11,
                loss_value: 0.123_456_789_012_345_67,
                abs_discrepancy: 1e-300,
            }],
            adaptive_loss: 0.1,
            adaptive_error: 1e-12,
        });
        r
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let r = sample();
        let back = RunReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn non_finite_fields_are_refused() {
        let mut r = sample();
        assert!(r.check_finite().is_ok());
        r.l2_error = Some(f64::NAN);
        assert!(r.check_finite().is_err());
    }
}
