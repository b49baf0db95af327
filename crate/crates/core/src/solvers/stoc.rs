use rand::Rng as _;

use super::prox::{beta_update_into, y_update_into};
use super::state::Recorder;
use super::{seeded_rng, AdmmState, Budget, RunOptions, SolveResult, SolverError, Workspace};
use crate::accounting::Method;
use crate::linalg::{conjugate_gradient, CgOutcome};
use crate::model::{AdmmProblem, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub struct StocConfig {
    /// Initial step `η₀`; iteration `k` uses `η₀/√(k+1)`.
    pub eta0: f64,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub options: RunOptions,
}

impl StocConfig {
    pub fn new(eta0: f64, options: RunOptions) -> Self {
        Self {
            eta0,
            cg_tol: 1e-10,
            cg_max_iters: 500,
            options,
        }
    }
}

/// Solver for `argmin_x gᵀx + βᵀAx + (ρ/2)||Ax + By - c||² + ||x - x_k||²/(2η)`,
/// i.e. `(I/η + ρAᵀA) x = x_k/η - g - Aᵀ(β + ρ(By - c))`.
pub(crate) struct ProxSolver {
    u: Vec<f64>,
    l_scratch: Vec<f64>,
    rhs: Vec<f64>,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
}

impl ProxSolver {
    pub fn new(prob: &AdmmProblem, ws: &mut Workspace, cg_tol: f64, cg_max_iters: usize) -> Self {
        Self {
            u: vec![0.0; prob.dim_constraint()],
            l_scratch: vec![0.0; prob.dim_constraint()],
            rhs: ws.vector(),
            cg_tol,
            cg_max_iters,
        }
    }

    /// Solves in place: `x` holds `x_k` on entry (the warm start) and the
    /// minimizer on exit.
    pub fn solve(
        &mut self,
        prob: &AdmmProblem,
        x: &mut [f64],
        grad: &[f64],
        y: &[f64],
        beta: &[f64],
        eta: f64,
    ) -> Result<CgOutcome, SolverError> {
        let cons = prob.constraint();
        let a = cons.a();
        let rho = prob.rho();
        cons.b().matvec_into(y, &mut self.u)?;
        for ((ui, bi), ci) in self.u.iter_mut().zip(beta).zip(cons.c()) {
            *ui = bi + rho * (*ui - ci);
        }
        a.matvec_transpose_into(&self.u, &mut self.rhs)?;
        if rho == 0.0 || a.nnz() == 0 {
            for ((xi, gi), ai) in x.iter_mut().zip(grad).zip(&self.rhs) {
                *xi -= eta * (gi + ai);
            }
            return Ok(CgOutcome {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            });
        }
        let inv_eta = 1.0 / eta;
        for ((r, xi), gi) in self.rhs.iter_mut().zip(x.iter()).zip(grad) {
            *r = xi * inv_eta - gi - *r;
        }
        let scratch = &mut self.l_scratch;
        let apply = |v: &[f64], out: &mut [f64]| {
            a.matvec_into(v, scratch).expect("dimensions checked");
            a.matvec_transpose_into(scratch, out).expect("dimensions checked");
            for (o, vi) in out.iter_mut().zip(v) {
                *o = vi * inv_eta + rho * *o;
            }
        };
        Ok(conjugate_gradient(apply, &self.rhs, x, self.cg_tol, self.cg_max_iters))
    }
}

/// One linearized proximal `x`-update from `x_k` with gradient `grad`.
pub fn solve_proximal_x(
    prob: &AdmmProblem,
    x_k: &[f64],
    grad: &[f64],
    y: &[f64],
    beta: &[f64],
    eta: f64,
) -> Result<(Vec<f64>, CgOutcome), SolverError> {
    let p = prob.dim_x();
    for (what, v, expected) in [
        ("x_k", x_k, p),
        ("grad", grad, p),
        ("y", y, prob.dim_y()),
        ("beta", beta, prob.dim_constraint()),
    ] {
        if v.len() != expected {
            return Err(ModelError::Dimension {
                what,
                expected,
                found: v.len(),
            }
            .into());
        }
    }
    if !(eta > 0.0) {
        return Err(SolverError::InvalidConfig(format!(
            "step size must be positive, got {eta}"
        )));
    }
    let mut ws = Workspace::new(p);
    let mut solver = ProxSolver::new(prob, &mut ws, 1e-10, 10 * p.max(50));
    let mut x = x_k.to_vec();
    let outcome = solver.solve(prob, &mut x, grad, y, beta, eta)?;
    Ok((x, outcome))
}

pub(crate) fn per_sample_iterations(opts: &RunOptions, n: usize) -> u64 {
    match opts.budget {
        Budget::Iterations(k) => k,
        Budget::Passes(p) => (p * n as f64).ceil() as u64,
    }
}

pub(crate) fn check_b(prob: &AdmmProblem) -> Result<(), SolverError> {
    if prob.constraint().b_is_negative_identity() {
        Ok(())
    } else {
        Err(SolverError::UnsupportedConstraint(
            "the y-update has a closed form only for B = -I".into(),
        ))
    }
}

/// Stochastic ADMM with step `η₀/√(k+1)`: one sample gradient per iteration,
/// `n` iterations per effective pass. A checkpoint is taken every `n`
/// iterations and at the end.
pub fn stoc_admm_solve(prob: &AdmmProblem, config: &StocConfig, seed: u64) -> Result<SolveResult, SolverError> {
    let opts = &config.options;
    opts.validate()?;
    check_b(prob)?;
    if !(config.eta0 > 0.0) || !config.eta0.is_finite() {
        return Err(SolverError::InvalidConfig(format!(
            "step size must be positive, got {}",
            config.eta0
        )));
    }
    let n = prob.n_samples();
    let mut ws = Workspace::new(prob.dim_x());
    let mut state = AdmmState::new(prob, opts.x0.as_deref(), &mut ws)?;
    let mut grad = ws.vector();
    let mut prox = ProxSolver::new(prob, &mut ws, config.cg_tol, config.cg_max_iters);
    let mut rec = Recorder::new(Method::Stoc, prob, opts, &state);
    let mut rng = seeded_rng(seed);
    let total = per_sample_iterations(opts, n);
    let mut cg_failures = 0u64;
    for k in 0..total {
        let i = rng.random_range(0..n);
        prob.sample_grad_into(i, &state.x, &mut grad);
        state.samples_visited += 1;
        state.gradient_evaluations += 1;
        let eta = config.eta0 / ((k + 1) as f64).sqrt();
        let out = prox.solve(prob, &mut state.x, &grad, &state.y, &state.beta, eta)?;
        if !out.converged {
            cg_failures += 1;
        }
        y_update_into(prob, &state.x, &state.beta, &mut state.y)?;
        beta_update_into(prob, &state.x, &state.y, &mut state.beta)?;
        state.record_iterate()?;
        rec.trace_step(&state, Vec::new(), 1, eta);
        if (k + 1) % n as u64 == 0 {
            rec.checkpoint(&state);
        }
    }
    if cg_failures > 0 {
        rec.warn(format!(
            "conjugate gradient missed tolerance {:.1e} in {cg_failures} x-updates; best iterates used",
            config.cg_tol
        ));
    }
    let memory = ws.footprint();
    rec.finish(prob, state, memory)
}
