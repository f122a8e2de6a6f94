//! Solve reports: per-run iteration traces, timings, and termination info,
//! serializable for the CLI and the benchmark tables.

use serde::{Deserialize, Serialize};

use crate::kkt::Residuals;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIterations,
    Failed(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub sigma: f64,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: String,
    pub instance: String,
    /// outer iterations for the ALM family; total iterations for sGS-ADMM
    pub iterations: usize,
    /// total inner/subproblem iterations (0 for sGS-ADMM)
    pub inner_iterations: usize,
    pub wall_time_s: f64,
    pub termination: Termination,
    pub final_residuals: Residuals,
    pub trace: Vec<TracePoint>,
    pub factorizations: usize,
    /// ridge deltas applied to singular normal matrices, if any
    pub ridge_notes: Vec<String>,
    pub notes: Vec<String>,
}

impl SolveReport {
    pub fn new(solver: &str, instance: &str) -> Self {
        SolveReport {
            solver: solver.to_string(),
            instance: instance.to_string(),
            iterations: 0,
            inner_iterations: 0,
            wall_time_s: 0.0,
            termination: Termination::MaxIterations,
            final_residuals: Residuals::default(),
            trace: Vec::new(),
            factorizations: 0,
            ridge_notes: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}
