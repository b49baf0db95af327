use super::{AdmmState, SolverError};
use crate::linalg::vector::norm;
use crate::model::AdmmProblem;

/// `sign(v) · max(|v| - κ, 0)`.
pub fn soft_threshold(v: f64, kappa: f64) -> Result<f64, SolverError> {
    if !(kappa >= 0.0) {
        return Err(SolverError::InvalidConfig(format!(
            "soft-threshold level must be non-negative, got {kappa}"
        )));
    }
    Ok(shrink(v, kappa))
}

#[inline]
pub(crate) fn shrink(v: f64, kappa: f64) -> f64 {
    if v > kappa {
        v - kappa
    } else if v < -kappa {
        v + kappa
    } else {
        0.0
    }
}

/// `argmin_y L(x_new, y, β)` for `g(y) = λ||y||₁` and `B = -I`:
/// `y = soft(Ax_new - c + β/ρ, λ/ρ)`.
pub fn y_update(prob: &AdmmProblem, x_new: &[f64], beta: &[f64]) -> Result<Vec<f64>, SolverError> {
    let mut y = vec![0.0; prob.dim_y()];
    y_update_into(prob, x_new, beta, &mut y)?;
    Ok(y)
}

pub(crate) fn y_update_into(prob: &AdmmProblem, x_new: &[f64], beta: &[f64], y: &mut [f64]) -> Result<(), SolverError> {
    let cons = prob.constraint();
    if !cons.b_is_negative_identity() {
        return Err(SolverError::UnsupportedConstraint(
            "the y-update has a closed form only for B = -I".into(),
        ));
    }
    if beta.len() != cons.n_rows() {
        return Err(SolverError::Model(crate::model::ModelError::Dimension {
            what: "beta",
            expected: cons.n_rows(),
            found: beta.len(),
        }));
    }
    cons.a().matvec_into(x_new, y)?;
    let rho = prob.rho();
    let kappa = prob.l1_strength() / rho;
    for ((yi, bi), ci) in y.iter_mut().zip(beta).zip(cons.c()) {
        *yi = shrink(*yi - ci + bi / rho, kappa);
    }
    Ok(())
}

/// `β + ρ(Ax + By - c)` at the state's current iterates.
pub fn beta_update(state: &AdmmState, prob: &AdmmProblem) -> Result<Vec<f64>, SolverError> {
    let mut beta = state.beta.clone();
    beta_update_into(prob, &state.x, &state.y, &mut beta)?;
    Ok(beta)
}

pub(crate) fn beta_update_into(prob: &AdmmProblem, x: &[f64], y: &[f64], beta: &mut [f64]) -> Result<(), SolverError> {
    let r = prob.constraint().residual(x, y)?;
    let rho = prob.rho();
    for (b, ri) in beta.iter_mut().zip(&r) {
        *b += rho * ri;
    }
    Ok(())
}

/// Euclidean ball `{w : ||w - center|| ≤ radius}`; its diameter is the `D` in
/// the step-size schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBall {
    center: Vec<f64>,
    radius: f64,
}

impl ProjectionBall {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self, SolverError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "projection radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn centered(p: usize, radius: f64) -> Result<Self, SolverError> {
        Self::new(vec![0.0; p], radius)
    }

    /// Ball at the origin with radius `max(10·||x_ref||, 1)`, where `x_ref` is
    /// one cyclic epoch of plain SGD on `f` from zero with step `1/ν_f`.
    pub fn from_sgd_estimate(prob: &AdmmProblem) -> Result<Self, SolverError> {
        let p = prob.dim_x();
        let step = 1.0 / prob.smoothness_constant().max(f64::MIN_POSITIVE);
        let mut x = vec![0.0; p];
        let mut g = vec![0.0; p];
        for i in 0..prob.n_samples() {
            prob.sample_grad_into(i, &x, &mut g);
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= step * gi;
            }
        }
        let r = norm(&x);
        let radius = if r.is_finite() { (10.0 * r).max(1.0) } else { 1.0 };
        Self::centered(p, radius)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        self.distance(w) <= self.radius
    }

    fn distance(&self, w: &[f64]) -> f64 {
        crate::linalg::vector::dist(w, &self.center)
    }

    pub(crate) fn enlarge(&mut self) {
        self.radius *= 2.0;
    }

    /// Nearest point of the ball to `w`.
    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        let mut out = w.to_vec();
        self.project_in_place(&mut out);
        out
    }

    /// Projects `w` in place; returns whether the projection moved it.
    pub fn project_in_place(&self, w: &mut [f64]) -> bool {
        let d = self.distance(w);
        // An overflowed distance would rescale w to the center and hide divergence.
        if d <= self.radius || !d.is_finite() {
            return false;
        }
        let f = self.radius / d;
        for (wi, ci) in w.iter_mut().zip(&self.center) {
            *wi = ci + f * (*wi - ci);
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use crate::model::{ConstraintSpec, LossSpec, SampleSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn problem(a: CsrMatrix, lambda: f64, rho: f64) -> AdmmProblem {
        let p = a.n_cols();
        let s = SampleSet::new(CsrMatrix::identity(p), vec![1.0; p]).unwrap();
        AdmmProblem::new(
            Arc::new(s),
            LossSpec::logistic(0.0),
            lambda,
            Arc::new(ConstraintSpec::difference(a)),
            rho,
        )
        .unwrap()
    }

    #[test]
    fn soft_threshold_values() {
        assert_eq!(soft_threshold(3.0, 1.0).unwrap(), 2.0);
        assert_eq!(soft_threshold(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(soft_threshold(-2.0, 0.5).unwrap(), -1.5);
        assert!(soft_threshold(1.0, -0.1).is_err());
    }

    #[test]
    fn y_update_without_l1_is_shifted_ax() {
        let prob = problem(CsrMatrix::identity(3), 0.0, 2.0);
        let x = [1.0, -2.0, 0.25];
        let beta = [0.5, 1.0, -4.0];
        let y = y_update(&prob, &x, &beta).unwrap();
        assert_eq!(y, vec![1.25, -1.5, -1.75]);
    }

    #[test]
    fn y_update_thresholds() {
        // Ax + β/ρ = (3, -0.5, 0), λ/ρ = 1
        let prob = problem(CsrMatrix::identity(3), 1.0, 1.0);
        let y = y_update(&prob, &[3.0, -0.5, 0.0], &[0.0; 3]).unwrap();
        assert_eq!(y, vec![2.0, 0.0, 0.0]);
    }

    #[test]
    fn y_update_rejects_general_b() {
        let a = CsrMatrix::identity(2);
        let cons = ConstraintSpec::new(a.clone(), CsrMatrix::identity(2), vec![0.0; 2]).unwrap();
        let s = SampleSet::new(CsrMatrix::identity(2), vec![1.0, 1.0]).unwrap();
        let prob = AdmmProblem::new(Arc::new(s), LossSpec::logistic(0.0), 0.1, Arc::new(cons), 1.0).unwrap();
        assert!(matches!(
            y_update(&prob, &[0.0, 0.0], &[0.0, 0.0]),
            Err(SolverError::UnsupportedConstraint(_))
        ));
    }

    #[test]
    fn beta_update_cases() {
        let prob = problem(CsrMatrix::identity(2), 0.1, 2.0);
        let mut ws = super::super::Workspace::new(2);
        let mut st = AdmmState::new(&prob, None, &mut ws).unwrap();
        st.x = vec![1.0, 2.0];
        st.y = vec![1.0, 2.0];
        st.beta = vec![0.3, -0.7];
        assert_eq!(beta_update(&st, &prob).unwrap(), st.beta);
        st.beta = vec![0.0, 0.0];
        st.y = vec![0.0, 0.5];
        assert_eq!(beta_update(&st, &prob).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn projection_cases() {
        let ball = ProjectionBall::centered(2, 1.0).unwrap();
        assert_eq!(ball.project(&[0.3, -0.4]), vec![0.3, -0.4]);
        let out = ball.project(&[3.0, 4.0]);
        assert!((out[0] - 0.6).abs() < 1e-15 && (out[1] - 0.8).abs() < 1e-15);
        assert!(ProjectionBall::centered(2, 0.0).is_err());
    }

    #[test]
    fn projection_beats_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let ball = ProjectionBall::new(vec![0.5, -0.25], 1.3).unwrap();
        for _ in 0..20 {
            let w = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
            let pr = ball.project(&w);
            let d_pr = crate::linalg::vector::dist(&pr, ball.center());
            assert!(d_pr <= 1.3 + 1e-12);
            let best = (0..=400)
                .flat_map(|i| (0..=400).map(move |j| (i, j)))
                .map(|(i, j)| [0.5 - 1.3 + 2.6 * i as f64 / 400.0, -0.25 - 1.3 + 2.6 * j as f64 / 400.0])
                .filter(|g| ball.contains(g))
                .map(|g| crate::linalg::vector::dist(&g, &w))
                .fold(f64::INFINITY, f64::min);
            assert!(crate::linalg::vector::dist(&pr, &w) <= best + 1e-12);
        }
    }
}
