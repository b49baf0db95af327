use rand::Rng as _;

use super::prox::{beta_update_into, y_update_into};
use super::state::Recorder;
use super::{
    schedule_eta_m, seeded_rng, AdmmState, Budget, ProjectionBall, RunOptions, Schedule, ScheduleMode, SolveResult,
    SolverError, StrongParams, Workspace,
};
use crate::accounting::Method;
use crate::linalg::vector::norm;
use crate::model::{AdmmProblem, ModelError};

/// Most ball enlargements tried before the projection warning is left standing.
const MAX_ENLARGEMENTS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct ScasConfig {
    pub schedule: Schedule,
    /// Double the ball radius and redo the outer iteration when more than half
    /// of its inner steps were projected.
    pub enlarge_ball: bool,
    pub options: RunOptions,
}

impl ScasConfig {
    pub fn new(schedule: Schedule, options: RunOptions) -> Self {
        Self {
            schedule,
            enlarge_ball: true,
            options,
        }
    }
}

/// Per-outer-iteration constants of the inner loop: `u = β_t + ρ(By_t - c)`
/// and a constraint-space scratch vector.
struct InnerTerms {
    u: Vec<f64>,
    aw: Vec<f64>,
}

impl InnerTerms {
    fn new(prob: &AdmmProblem, y: &[f64], beta: &[f64]) -> Result<Self, SolverError> {
        let mut u = prob.constraint().by_minus_c(y)?;
        let rho = prob.rho();
        for (ui, bi) in u.iter_mut().zip(beta) {
            *ui = bi + rho * *ui;
        }
        let aw = vec![0.0; u.len()];
        Ok(Self { u, aw })
    }

    /// `out = Aᵀ(β + ρ(Aw + By - c))`.
    fn constraint_term(&mut self, prob: &AdmmProblem, w: &[f64], out: &mut [f64]) -> Result<(), SolverError> {
        let a = prob.constraint().a();
        a.matvec_into(w, &mut self.aw)?;
        let rho = prob.rho();
        for (t, ui) in self.aw.iter_mut().zip(&self.u) {
            *t = rho * *t + ui;
        }
        a.matvec_transpose_into(&self.aw, out)?;
        Ok(())
    }

    /// `out = ∇f_i(w) - ∇f_i(w_0) + z + Aᵀ(β + ρ(Aw + By - c))`.
    fn direction(
        &mut self,
        prob: &AdmmProblem,
        w: &[f64],
        w0: &[f64],
        z: &[f64],
        i: usize,
        out: &mut [f64],
    ) -> Result<(), SolverError> {
        self.constraint_term(prob, w, out)?;
        let mu = prob.loss().l2_strength;
        for (((o, wj), w0j), zj) in out.iter_mut().zip(w).zip(w0).zip(z) {
            *o += mu * (wj - w0j) + zj;
        }
        let coef = prob.grad_coefficient(i, w) - prob.grad_coefficient(i, w0);
        let (cols, vals) = prob.samples().features().row(i);
        for (&c, &a) in cols.iter().zip(vals) {
            out[c] += coef * a;
        }
        Ok(())
    }
}

fn check_inner_inputs(
    prob: &AdmmProblem,
    w_m: &[f64],
    w_0: &[f64],
    z_t: &[f64],
    y_t: &[f64],
    beta_t: &[f64],
    i_m: usize,
) -> Result<(), SolverError> {
    let p = prob.dim_x();
    for (what, v, expected) in [
        ("w_m", w_m, p),
        ("w_0", w_0, p),
        ("z_t", z_t, p),
        ("y_t", y_t, prob.dim_y()),
        ("beta_t", beta_t, prob.dim_constraint()),
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
    if i_m >= prob.n_samples() {
        return Err(ModelError::IndexOutOfRange {
            index: i_m,
            n: prob.n_samples(),
        }
        .into());
    }
    Ok(())
}

/// The bracketed search direction
/// `∇f_i(w_m) - ∇f_i(w_0) + z_t + Aᵀβ_t + ρAᵀ(Aw_m + By_t - c)`.
pub fn inner_direction(
    prob: &AdmmProblem,
    w_m: &[f64],
    w_0: &[f64],
    z_t: &[f64],
    y_t: &[f64],
    beta_t: &[f64],
    i_m: usize,
) -> Result<Vec<f64>, SolverError> {
    check_inner_inputs(prob, w_m, w_0, z_t, y_t, beta_t, i_m)?;
    let mut terms = InnerTerms::new(prob, y_t, beta_t)?;
    let mut out = vec![0.0; w_m.len()];
    terms.direction(prob, w_m, w_0, z_t, i_m, &mut out)?;
    Ok(out)
}

/// One inner step `w_{m+1} = π_X(w_m - η·direction)`. Without a ball the
/// projection is the identity.
#[allow(clippy::too_many_arguments)]
pub fn inner_step(
    prob: &AdmmProblem,
    w_m: &[f64],
    w_0: &[f64],
    z_t: &[f64],
    y_t: &[f64],
    beta_t: &[f64],
    eta: f64,
    i_m: usize,
    ball: Option<&ProjectionBall>,
) -> Result<Vec<f64>, SolverError> {
    if !(eta > 0.0) {
        return Err(SolverError::InvalidConfig(format!(
            "step size must be positive, got {eta}"
        )));
    }
    let mut w = inner_direction(prob, w_m, w_0, z_t, y_t, beta_t, i_m)?;
    for (wj, wm) in w.iter_mut().zip(w_m) {
        *wj = wm - eta * *wj;
    }
    if let Some(ball) = ball {
        ball.project_in_place(&mut w);
    }
    Ok(w)
}

/// Persistent buffers of one SCAS run. `x` doubles as `w_0` during the inner
/// loop, so the total is seven `p`-vectors including the state's two.
struct ScasBuffers {
    w: Vec<f64>,
    sum: Vec<f64>,
    z: Vec<f64>,
    dir: Vec<f64>,
    aux: Vec<f64>,
}

impl ScasBuffers {
    fn new(ws: &mut Workspace) -> Self {
        Self {
            w: ws.vector(),
            sum: ws.vector(),
            z: ws.vector(),
            dir: ws.vector(),
            aux: ws.vector(),
        }
    }
}

/// What one outer iteration needs to know about the inner averaging rule.
enum Averaging {
    /// General convex variant: `s = w_0 + Σ_{m=1}^{M-1} w_m`.
    Plain,
    /// Strongly convex variant: `s = Σ_{m=0}^{M-1} (r w_m + s w_{m+1})/(2η)`.
    Weighted { r: f64, s: f64 },
}

struct OuterOutcome {
    projected_steps: usize,
    inner_steps: usize,
}

/// Runs the inner loop from `w_0 = state.x` and leaves the average in `buf.sum`.
#[allow(clippy::too_many_arguments)]
fn inner_loop(
    prob: &AdmmProblem,
    state: &AdmmState,
    terms: &mut InnerTerms,
    buf: &mut ScasBuffers,
    eta: f64,
    m: usize,
    averaging: &Averaging,
    ball: Option<&ProjectionBall>,
    rng: &mut super::Rng,
    mut inner_trace: Option<&mut Vec<Vec<f64>>>,
) -> Result<OuterOutcome, SolverError> {
    let n = prob.n_samples();
    let w0 = &state.x;
    buf.w.copy_from_slice(w0);
    let steps = match averaging {
        Averaging::Plain => {
            buf.sum.copy_from_slice(w0);
            m.saturating_sub(1)
        }
        Averaging::Weighted { .. } => {
            buf.sum.iter_mut().for_each(|v| *v = 0.0);
            m
        }
    };
    if let Some(tr) = inner_trace.as_deref_mut() {
        tr.push(buf.w.clone());
    }
    let mut projected = 0;
    for _ in 0..steps {
        let i = rng.random_range(0..n);
        terms.direction(prob, &buf.w, w0, &buf.z, i, &mut buf.dir)?;
        for (d, wj) in buf.dir.iter_mut().zip(&buf.w) {
            *d = wj - eta * *d;
        }
        if let Some(ball) = ball {
            if ball.project_in_place(&mut buf.dir) {
                projected += 1;
            }
        }
        match *averaging {
            Averaging::Plain => {
                for (s, v) in buf.sum.iter_mut().zip(&buf.dir) {
                    *s += v;
                }
            }
            Averaging::Weighted { r, s } => {
                let two_eta = 2.0 * eta;
                for ((acc, wm), wn) in buf.sum.iter_mut().zip(&buf.w).zip(&buf.dir) {
                    *acc += (r * wm + s * wn) / two_eta;
                }
            }
        }
        std::mem::swap(&mut buf.w, &mut buf.dir);
        if let Some(tr) = inner_trace.as_deref_mut() {
            tr.push(buf.w.clone());
        }
    }
    let inv = m as f64;
    for s in buf.sum.iter_mut() {
        *s /= inv;
    }
    Ok(OuterOutcome {
        projected_steps: projected,
        inner_steps: steps,
    })
}

fn budget_exhausted(opts: &RunOptions, rec: &Recorder, state: &AdmmState) -> bool {
    match opts.budget {
        Budget::Iterations(t) => state.t >= t,
        Budget::Passes(p) => rec.passes(state) >= p - 1e-12,
    }
}

/// Installs `buf.sum` as `x_{t+1}`, then updates `y`, `β` and the averages.
fn finish_outer(prob: &AdmmProblem, state: &mut AdmmState, buf: &mut ScasBuffers) -> Result<(), SolverError> {
    std::mem::swap(&mut state.x, &mut buf.sum);
    y_update_into(prob, &state.x, &state.beta, &mut state.y)?;
    beta_update_into(prob, &state.x, &state.y, &mut state.beta)?;
    state.record_iterate()
}

/// SCAS-ADMM for general convex losses.
///
/// Each outer iteration charges `n + M_t` sample visits: `n` for the full
/// gradient `z_t` and `M_t` for the inner loop, so `M_t = n` costs two passes.
pub fn scas_general_solve(
    prob: &AdmmProblem,
    config: &ScasConfig,
    ball: ProjectionBall,
    seed: u64,
) -> Result<SolveResult, SolverError> {
    let opts = &config.options;
    opts.validate()?;
    config.schedule.validate()?;
    if !prob.constraint().b_is_negative_identity() {
        return Err(SolverError::UnsupportedConstraint(
            "the y-update has a closed form only for B = -I".into(),
        ));
    }
    if ball.center().len() != prob.dim_x() {
        return Err(ModelError::Dimension {
            what: "ball center",
            expected: prob.dim_x(),
            found: ball.center().len(),
        }
        .into());
    }
    let mut ball = ball;
    let mut schedule = config.schedule.clone();
    let n = prob.n_samples();
    let mut ws = Workspace::new(prob.dim_x());
    let mut state = AdmmState::new(prob, opts.x0.as_deref(), &mut ws)?;
    if !ball.contains(&state.x) {
        return Err(SolverError::InvalidConfig(
            "the projection ball must contain the initial point".into(),
        ));
    }
    let mut buf = ScasBuffers::new(&mut ws);
    let mut rec = Recorder::new(Method::Scas, prob, opts, &state);
    let mut rng = seeded_rng(seed);
    let mut enlargements = 0;

    while !budget_exhausted(opts, &rec, &state) {
        prob.full_grad_into(&state.x, &mut buf.z);
        let mut terms = InnerTerms::new(prob, &state.y, &state.beta)?;
        // G_t = ||∇L(x_t)|| from z_t and the constraint terms.
        terms.constraint_term(prob, &state.x, &mut buf.aux)?;
        for (a, zj) in buf.aux.iter_mut().zip(&buf.z) {
            *a += zj;
        }
        let g_t = norm(&buf.aux);
        let (eta, m) = schedule_eta_m(&schedule, state.t, g_t, n)?;
        if m == 1 && state.t == 0 {
            rec.warn("M_t = 1: the inner loop is empty and x does not move".into());
        }
        let mut inner = rec.record_inner.then(Vec::new);
        let outcome = inner_loop(
            prob,
            &state,
            &mut terms,
            &mut buf,
            eta,
            m,
            &Averaging::Plain,
            Some(&ball),
            &mut rng,
            inner.as_mut(),
        )?;
        state.samples_visited += (n + m) as u64;
        state.gradient_evaluations += (n + 2 * outcome.inner_steps) as u64;

        if outcome.inner_steps > 0 && 2 * outcome.projected_steps > outcome.inner_steps {
            if config.enlarge_ball && enlargements < MAX_ENLARGEMENTS {
                enlargements += 1;
                ball.enlarge();
                if schedule.mode == ScheduleMode::Theoretical {
                    schedule.diameter *= 2.0;
                }
                rec.note(format!(
                    "{} of {} inner steps projected at t = {}; radius doubled to {:.6e}, outer iteration redone",
                    outcome.projected_steps,
                    outcome.inner_steps,
                    state.t,
                    ball.radius()
                ));
                continue;
            }
            rec.warn(format!(
                "{} of {} inner steps projected at t = {}",
                outcome.projected_steps, outcome.inner_steps, state.t
            ));
        }
        finish_outer(prob, &mut state, &mut buf)?;
        rec.checkpoint(&state);
        rec.trace_step(&state, inner.unwrap_or_default(), m, eta);
        log::debug!("scas t={} eta={eta:.3e} M={m} G={g_t:.3e}", state.t);
    }
    let memory = ws.footprint();
    rec.finish(prob, state, memory)
}

/// SCAS-ADMM for strongly convex losses with constant `η` and `M`.
///
/// Without a ball the projection is the identity. Each outer iteration
/// charges `n + M` sample visits.
pub fn scas_strong_solve(
    prob: &AdmmProblem,
    params: &StrongParams,
    ball: Option<&ProjectionBall>,
    seed: u64,
    options: &RunOptions,
) -> Result<SolveResult, SolverError> {
    options.validate()?;
    params.check_runnable()?;
    if !prob.constraint().b_is_negative_identity() {
        return Err(SolverError::UnsupportedConstraint(
            "the y-update has a closed form only for B = -I".into(),
        ));
    }
    let n = prob.n_samples();
    let mut ws = Workspace::new(prob.dim_x());
    let mut state = AdmmState::new(prob, options.x0.as_deref(), &mut ws)?;
    if let Some(ball) = ball {
        if ball.center().len() != prob.dim_x() {
            return Err(ModelError::Dimension {
                what: "ball center",
                expected: prob.dim_x(),
                found: ball.center().len(),
            }
            .into());
        }
        if !ball.contains(&state.x) {
            return Err(SolverError::InvalidConfig(
                "the projection ball must contain the initial point".into(),
            ));
        }
    }
    let mut buf = ScasBuffers::new(&mut ws);
    let mut rec = Recorder::new(Method::Scas, prob, options, &state);
    let mut rng = seeded_rng(seed);
    let averaging = Averaging::Weighted {
        r: params.r,
        s: params.s,
    };
    while !budget_exhausted(options, &rec, &state) {
        prob.full_grad_into(&state.x, &mut buf.z);
        let mut terms = InnerTerms::new(prob, &state.y, &state.beta)?;
        let mut inner = rec.record_inner.then(Vec::new);
        let outcome = inner_loop(
            prob,
            &state,
            &mut terms,
            &mut buf,
            params.eta,
            params.m,
            &averaging,
            ball,
            &mut rng,
            inner.as_mut(),
        )?;
        state.samples_visited += (n + params.m) as u64;
        state.gradient_evaluations += (n + 2 * outcome.inner_steps) as u64;
        finish_outer(prob, &mut state, &mut buf)?;
        rec.checkpoint(&state);
        rec.trace_step(&state, inner.unwrap_or_default(), params.m, params.eta);
    }
    let memory = ws.footprint();
    rec.finish(prob, state, memory)
}
