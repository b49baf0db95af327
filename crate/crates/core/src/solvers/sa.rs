use rand::Rng as _;

use super::prox::{beta_update_into, y_update_into};
use super::state::Recorder;
use super::stoc::{check_b, per_sample_iterations, ProxSolver};
use super::{seeded_rng, AdmmState, RunOptions, SolveResult, SolverError, Workspace};
use crate::accounting::Method;
use crate::model::AdmmProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct SaConfig {
    /// Constant step `η`.
    pub eta: f64,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub options: RunOptions,
}

impl SaConfig {
    pub fn new(eta: f64, options: RunOptions) -> Self {
        Self {
            eta,
            cg_tol: 1e-10,
            cg_max_iters: 500,
            options,
        }
    }
}

/// Last-seen gradient of every sample and their running mean `ḡ`.
#[derive(Debug, Clone)]
pub struct GradientTable {
    n: usize,
    p: usize,
    entries: Vec<f64>,
    average: Vec<f64>,
    scratch: Vec<f64>,
}

impl GradientTable {
    /// Fills entry `i` with `∇f_i(x0)` for every `i`.
    pub fn new(prob: &AdmmProblem, x0: &[f64], ws: &mut Workspace) -> Self {
        let n = prob.n_samples();
        let p = prob.dim_x();
        let mut table = Self {
            n,
            p,
            entries: ws.gradient_table(n),
            average: ws.vector(),
            scratch: ws.vector(),
        };
        for i in 0..n {
            prob.sample_grad_into(i, x0, &mut table.entries[i * p..(i + 1) * p]);
        }
        table.recompute_average();
        table
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn entry(&self, i: usize) -> &[f64] {
        &self.entries[i * self.p..(i + 1) * self.p]
    }

    pub fn average(&self) -> &[f64] {
        &self.average
    }

    /// Replaces entry `i` by `∇f_i(x)` and updates `ḡ` by the difference.
    pub fn refresh(&mut self, prob: &AdmmProblem, i: usize, x: &[f64]) {
        let p = self.p;
        prob.sample_grad_into(i, x, &mut self.scratch);
        let inv_n = 1.0 / self.n as f64;
        let old = &mut self.entries[i * p..(i + 1) * p];
        for ((g, o), s) in self.average.iter_mut().zip(old.iter_mut()).zip(&self.scratch) {
            *g += (s - *o) * inv_n;
            *o = *s;
        }
    }

    /// Recomputes `ḡ` from the table, summing in ascending sample order.
    pub fn recompute_average(&mut self) {
        self.average.iter_mut().for_each(|g| *g = 0.0);
        for row in self.entries.chunks_exact(self.p) {
            for (g, v) in self.average.iter_mut().zip(row) {
                *g += v;
            }
        }
        let n = self.n as f64;
        self.average.iter_mut().for_each(|g| *g /= n);
    }
}

/// SA-ADMM: the `x`-update uses the mean `ḡ` of stored per-sample gradients
/// with a constant step. Filling the table at `x_0` is charged as one pass.
pub fn sa_admm_solve(prob: &AdmmProblem, config: &SaConfig, seed: u64) -> Result<SolveResult, SolverError> {
    let opts = &config.options;
    opts.validate()?;
    check_b(prob)?;
    if !(config.eta > 0.0) || !config.eta.is_finite() {
        return Err(SolverError::InvalidConfig(format!(
            "step size must be positive, got {}",
            config.eta
        )));
    }
    let n = prob.n_samples();
    let mut ws = Workspace::new(prob.dim_x());
    let mut state = AdmmState::new(prob, opts.x0.as_deref(), &mut ws)?;
    let mut table = GradientTable::new(prob, &state.x, &mut ws);
    state.samples_visited += n as u64;
    state.gradient_evaluations += n as u64;
    let mut prox = ProxSolver::new(prob, &mut ws, config.cg_tol, config.cg_max_iters);
    let mut rec = Recorder::new(Method::Sa, prob, opts, &state);
    let mut rng = seeded_rng(seed);
    let total = per_sample_iterations(opts, n).saturating_sub(match opts.budget {
        super::Budget::Passes(_) => n as u64,
        super::Budget::Iterations(_) => 0,
    });
    let mut cg_failures = 0u64;
    for k in 0..total {
        let i = rng.random_range(0..n);
        table.refresh(prob, i, &state.x);
        state.samples_visited += 1;
        state.gradient_evaluations += 1;
        let out = prox.solve(prob, &mut state.x, table.average(), &state.y, &state.beta, config.eta)?;
        if !out.converged {
            cg_failures += 1;
        }
        y_update_into(prob, &state.x, &state.beta, &mut state.y)?;
        beta_update_into(prob, &state.x, &state.y, &mut state.beta)?;
        state.record_iterate()?;
        rec.trace_step(&state, Vec::new(), 1, config.eta);
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
