use serde::Serialize;

use super::SolverError;
use crate::model::AdmmProblem;

/// Constants of the strongly convex SCAS variant.
///
/// `s = η/(1 - ν_L η/2)`, `r = 2η - s` and `α = 1 - ρλ₁s/2 - μ_f s/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrongParams {
    pub eta: f64,
    pub m: usize,
    pub r: f64,
    pub s: f64,
    pub alpha: f64,
    pub nu_l: f64,
    pub mu_f: f64,
    pub mu_l: f64,
    /// Largest eigenvalue of `AᵀA`.
    pub lambda1: f64,
    pub rho: f64,
}

impl StrongParams {
    pub fn new(eta: f64, m: usize, nu_l: f64, mu_f: f64, mu_l: f64, lambda1: f64, rho: f64) -> Self {
        let s = eta / (1.0 - nu_l * eta / 2.0);
        let r = 2.0 * eta - s;
        let alpha = 1.0 - rho * lambda1 * s / 2.0 - mu_f * s / 4.0;
        Self {
            eta,
            m,
            r,
            s,
            alpha,
            nu_l,
            mu_f,
            mu_l,
            lambda1,
            rho,
        }
    }

    /// Derives `ν_L`, `μ_f`, `μ_L = μ_f + ρλ_min(AᵀA)` and `λ₁` from the problem.
    pub fn for_problem(prob: &AdmmProblem, eta: f64, m: usize) -> Result<Self, SolverError> {
        let (nu_l, converged) = prob.nu_l()?;
        if !converged {
            log::warn!("largest eigenvalue of A^T A did not converge; nu_L may be underestimated");
        }
        let lambda1 = prob.constraint_top_eigenvalue()?.value;
        let mu_l = prob.mu_l()?;
        Ok(Self::new(
            eta,
            m,
            nu_l,
            prob.loss().l2_strength,
            mu_l,
            lambda1,
            prob.rho(),
        ))
    }

    pub(crate) fn check_runnable(&self) -> Result<(), SolverError> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "step size must be positive, got {}",
                self.eta
            )));
        }
        if self.m == 0 {
            return Err(SolverError::InvalidConfig(
                "inner-loop length M must be at least 1".into(),
            ));
        }
        if !(self.mu_f > 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "the strongly convex variant needs mu_f > 0, got {}",
                self.mu_f
            )));
        }
        if !(self.r >= 0.0) || !(self.s > 0.0) || !self.s.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "r = 2*eta - s = {} or s is negative: the averaging weights need nu_L * eta <= 1 (nu_L = {}, eta = {})",
                self.r, self.nu_l, self.eta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; the condition holds when this is positive (strict) or non-negative.
    pub slack: f64,
    pub strict: bool,
    pub passed: bool,
}

impl ConditionCheck {
    fn new(name: &'static str, lhs: f64, rhs: f64, strict: bool) -> Self {
        let slack = rhs - lhs;
        let passed = slack.is_finite() && if strict { slack > 0.0 } else { slack >= 0.0 };
        Self {
            name,
            lhs,
            rhs,
            slack,
            strict,
            passed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    pub conditions: [ConditionCheck; 3],
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }
}

/// Checks the three sufficient conditions on `(η, M)` for the strongly convex
/// convergence guarantee:
///
/// * (a) `η - ν_L η²/2 > 0`
/// * (b) `(4ν_L² + μ_f ν_L/2) η + ρλ₁ ≤ μ_L`
/// * (c) `α/(2Mη) + 2ν_L² η/(2 - ν_L η) ≤ μ_f/4`
///
/// Reporting only; the solver runs regardless.
pub fn validate_strong_params(params: &StrongParams) -> ValidationReport {
    let StrongParams {
        eta,
        m,
        alpha,
        nu_l,
        mu_f,
        mu_l,
        lambda1,
        rho,
        ..
    } = *params;
    let a = ConditionCheck::new("a", nu_l * eta * eta / 2.0, eta, true);
    let b = ConditionCheck::new(
        "b",
        (4.0 * nu_l * nu_l + mu_f * nu_l / 2.0) * eta + rho * lambda1,
        mu_l,
        false,
    );
    let c = ConditionCheck::new(
        "c",
        alpha / (2.0 * m as f64 * eta) + 2.0 * nu_l * nu_l * eta / (2.0 - nu_l * eta),
        mu_f / 4.0,
        false,
    );
    ValidationReport { conditions: [a, b, c] }
}
