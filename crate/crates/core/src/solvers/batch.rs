use super::prox::{beta_update_into, y_update_into};
use super::state::Recorder;
use super::stoc::check_b;
use super::{AdmmState, Budget, RunOptions, SolveResult, SolverError, Workspace};
use crate::accounting::Method;
use crate::exec::Exec;
use crate::linalg::vector::norm;
use crate::model::AdmmProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    /// Inner gradient descent stops once `||∇L(x)|| ≤ inner_tol`.
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    /// Stop early once the primal residual `||Ax + By - c||` and the dual
    /// residual `ρ||AᵀB(y_t - y_{t-1})||` are both at most `tol`. Also stops
    /// when `|ΔP|/max(1, |P|) ≤ tol`, with `P` evaluated at `(x, Ax)`, and the
    /// warm start already met `inner_tol`: the iterate cannot improve further
    /// at that inner accuracy.
    pub convergence_tol: Option<f64>,
    pub options: RunOptions,
}

impl BatchConfig {
    pub fn new(options: RunOptions) -> Self {
        Self {
            inner_tol: 1e-8,
            inner_max_iters: 1000,
            convergence_tol: None,
            options,
        }
    }
}

/// Batch ADMM. The `x`-update minimizes `L(x, y_t, β_t)` inexactly by
/// full-gradient descent with step `1/ν_L`, warm-started at `x_t`. Each outer
/// iteration counts as one effective pass; `samples_visited` records the true
/// `n` visits per gradient evaluated.
pub fn batch_admm_solve(prob: &AdmmProblem, config: &BatchConfig) -> Result<SolveResult, SolverError> {
    let opts = &config.options;
    opts.validate()?;
    check_b(prob)?;
    if !(config.inner_tol >= 0.0) || config.inner_max_iters == 0 {
        return Err(SolverError::InvalidConfig(
            "batch inner solver needs inner_tol >= 0 and at least one iteration".into(),
        ));
    }
    let outer = match opts.budget {
        Budget::Iterations(t) => t,
        Budget::Passes(p) => p.ceil() as u64,
    };
    let (nu_l, converged) = prob.nu_l()?;
    let step = 1.0 / nu_l.max(f64::MIN_POSITIVE);
    let n = prob.n_samples() as u64;
    let cons = prob.constraint();
    let a = cons.a();
    let rho = prob.rho();

    let mut ws = Workspace::new(prob.dim_x());
    let mut state = AdmmState::new(prob, opts.x0.as_deref(), &mut ws)?;
    let mut grad = ws.vector();
    let mut at = ws.vector();
    let mut u = vec![0.0; prob.dim_constraint()];
    let mut l_scratch = vec![0.0; prob.dim_constraint()];
    let mut rec = Recorder::new(Method::Batch, prob, opts, &state);
    if !converged {
        rec.warn("largest eigenvalue of A^T A did not converge; step 1/nu_L may be too long".into());
    }
    let mut inner_failures = 0u64;
    let mut prev_obj = prob.objective_at_ax(Exec::Sequential, &state.x)?;
    let mut prev_y = state.y.clone();
    let mut y_change = vec![0.0; prob.dim_constraint()];

    for _ in 0..outer {
        cons.b().matvec_into(&state.y, &mut u)?;
        for ((ui, bi), ci) in u.iter_mut().zip(&state.beta).zip(cons.c()) {
            *ui = bi + rho * (*ui - ci);
        }
        let mut inner_ok = false;
        let mut inner_steps = 0;
        for it in 0..=config.inner_max_iters {
            prob.full_grad_into(&state.x, &mut grad);
            state.samples_visited += n;
            state.gradient_evaluations += n;
            a.matvec_into(&state.x, &mut l_scratch)?;
            for (t, ui) in l_scratch.iter_mut().zip(&u) {
                *t = rho * *t + ui;
            }
            a.matvec_transpose_into(&l_scratch, &mut at)?;
            for (g, ai) in grad.iter_mut().zip(&at) {
                *g += ai;
            }
            if norm(&grad) <= config.inner_tol {
                inner_ok = true;
                break;
            }
            if it == config.inner_max_iters {
                break;
            }
            for (xi, g) in state.x.iter_mut().zip(&grad) {
                *xi -= step * g;
            }
            inner_steps += 1;
        }
        if !inner_ok {
            inner_failures += 1;
        }
        y_update_into(prob, &state.x, &state.beta, &mut state.y)?;
        beta_update_into(prob, &state.x, &state.y, &mut state.beta)?;
        state.record_iterate()?;
        rec.checkpoint(&state);
        rec.trace_step(&state, Vec::new(), 0, step);

        if let Some(tol) = config.convergence_tol {
            let residual = norm(&cons.residual(&state.x, &state.y)?);
            let obj = prob.objective_at_ax(Exec::Sequential, &state.x)?;
            let change = (obj - prev_obj).abs() / prev_obj.abs().max(1.0);
            prev_obj = obj;
            for ((d, y), y0) in y_change.iter_mut().zip(&state.y).zip(&prev_y) {
                *d = y - y0;
            }
            prev_y.copy_from_slice(&state.y);
            cons.b().matvec_into(&y_change, &mut l_scratch)?;
            a.matvec_transpose_into(&l_scratch, &mut at)?;
            let dual = rho * norm(&at);
            let stalled = inner_ok && inner_steps == 0;
            if residual.max(dual) <= tol || (stalled && change <= tol) {
                break;
            }
        }
    }
    if inner_failures > 0 {
        rec.warn(format!(
            "inner gradient descent missed tolerance {:.1e} in {inner_failures} outer iterations",
            config.inner_tol
        ));
    }
    let memory = ws.footprint();
    rec.finish(prob, state, memory)
}
