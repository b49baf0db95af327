use serde::Serialize;

use crate::exec::Exec;
use crate::linalg::vector::norm;
use crate::model::AdmmProblem;
use crate::solvers::{batch_admm_solve, BatchConfig, RunOptions, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceConfig {
    /// Stop once the primal and dual residuals are both at most `tol`.
    pub tol: f64,
    pub max_outer: u64,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_outer: 100_000,
            inner_tol: 1e-11,
            inner_max_iters: 1000,
        }
    }
}

/// High-accuracy batch ADMM solution: the last iterate, not the average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `P(x*, Ax*)`.
    pub objective: f64,
    /// `||Ax* + By* - c||` at the returned iterate.
    pub residual: f64,
    pub iterations: u64,
    pub converged: bool,
}

pub fn reference_solution(
    prob: &AdmmProblem,
    config: &ReferenceConfig,
    x0: Option<Vec<f64>>,
) -> Result<ReferenceSolution, SolverError> {
    let mut options = RunOptions::iterations(config.max_outer).final_checkpoint_only();
    options.x0 = x0;
    let batch = BatchConfig {
        inner_tol: config.inner_tol,
        inner_max_iters: config.inner_max_iters,
        convergence_tol: Some(config.tol),
        options,
    };
    let result = batch_admm_solve(prob, &batch)?;
    let state = result.state;
    let residual = norm(&prob.constraint().residual(&state.x, &state.y)?);
    let objective = prob.objective_at_ax(Exec::Sequential, &state.x)?;
    let converged = state.t < config.max_outer;
    if !converged {
        log::warn!(
            "reference solve stopped at the {} iteration cap (residual {residual:.3e})",
            config.max_outer
        );
    }
    Ok(ReferenceSolution {
        x: state.x,
        y: state.y,
        objective,
        residual,
        iterations: state.t,
        converged,
    })
}
