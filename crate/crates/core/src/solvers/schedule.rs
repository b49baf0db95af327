use serde::{Deserialize, Serialize};

use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    /// `η_t = 1/(c_t (t+1)^δ)`, `M_t = ⌈c_t (t+1)^{2δ}⌉` with `c_t = ν_L²D² + G_t²`.
    Theoretical,
    /// Constant `η` and `M` (default `M = n`).
    Fixed,
}

/// Step size and inner-loop length for SCAS on general convex problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub mode: ScheduleMode,
    pub delta: f64,
    pub eta_override: Option<f64>,
    pub m_override: Option<usize>,
    pub nu_l: f64,
    /// Diameter `D` of the projection set.
    pub diameter: f64,
}

impl Schedule {
    pub fn theoretical(nu_l: f64, diameter: f64, delta: f64) -> Self {
        Self {
            mode: ScheduleMode::Theoretical,
            delta,
            eta_override: None,
            m_override: None,
            nu_l,
            diameter,
        }
    }

    /// Constant step `eta`; `m = None` means `M = n`.
    pub fn fixed(eta: f64, m: Option<usize>) -> Self {
        Self {
            mode: ScheduleMode::Fixed,
            delta: 0.0,
            eta_override: Some(eta),
            m_override: m,
            nu_l: 0.0,
            diameter: 0.0,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), SolverError> {
        if let Some(eta) = self.eta_override {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(SolverError::InvalidConfig(format!(
                    "step size must be positive, got {eta}"
                )));
            }
        }
        if self.m_override == Some(0) {
            return Err(SolverError::InvalidConfig(
                "inner-loop length must be at least 1".into(),
            ));
        }
        match self.mode {
            ScheduleMode::Theoretical => {
                if !(self.delta > 0.0) {
                    return Err(SolverError::InvalidConfig(format!(
                        "theoretical schedule needs delta > 0, got {}",
                        self.delta
                    )));
                }
                if !(self.nu_l >= 0.0) || !(self.diameter >= 0.0) {
                    return Err(SolverError::InvalidConfig(
                        "theoretical schedule needs non-negative nu_L and D".into(),
                    ));
                }
                Ok(())
            }
            ScheduleMode::Fixed if self.eta_override.is_none() => {
                Err(SolverError::InvalidConfig("fixed schedule needs a step size".into()))
            }
            ScheduleMode::Fixed => Ok(()),
        }
    }
}

/// `(η_t, M_t)` for outer iteration `t` given `G_t = ||∇L(x_t)||`.
pub fn schedule_eta_m(sched: &Schedule, t: u64, g_t: f64, n: usize) -> Result<(f64, usize), SolverError> {
    sched.validate()?;
    match sched.mode {
        ScheduleMode::Fixed => Ok((sched.eta_override.expect("validated"), sched.m_override.unwrap_or(n))),
        ScheduleMode::Theoretical => {
            let c = sched.nu_l * sched.nu_l * sched.diameter * sched.diameter + g_t * g_t;
            if !(c > 0.0) || !c.is_finite() {
                return Err(SolverError::InvalidConfig(format!(
                    "degenerate schedule: nu_L^2 D^2 + G_t^2 = {c}"
                )));
            }
            let base = (t + 1) as f64;
            let eta = sched.eta_override.unwrap_or_else(|| 1.0 / (c * base.powf(sched.delta)));
            let m = match sched.m_override {
                Some(m) => m,
                None => {
                    let m = (c * base.powf(2.0 * sched.delta)).ceil();
                    if m > (u32::MAX as f64) {
                        return Err(SolverError::InvalidConfig(format!(
                            "inner-loop length {m:.3e} at t = {t} is not computable"
                        )));
                    }
                    (m as usize).max(1)
                }
            };
            Ok((eta, m))
        }
    }
}
