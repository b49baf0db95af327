use super::vector::{axpy, dot, norm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Relative residual `||b - Kx|| / ||b||` of the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradient for a symmetric positive definite operator `apply`.
///
/// `x` holds the warm start on entry and the solution on exit. Stops once the
/// relative residual drops to `tol`. On non-convergence `x` is the iterate with
/// the smallest residual seen.
pub fn conjugate_gradient<F>(mut apply: F, rhs: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> CgOutcome
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = rhs.len();
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut kx = vec![0.0; n];
    apply(x, &mut kx);
    let mut r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, k)| b - k).collect();
    let mut rr = dot(&r, &r);
    let mut rel = rr.sqrt() / b_norm;
    if rel <= tol {
        return CgOutcome {
            iterations: 0,
            relative_residual: rel,
            converged: true,
        };
    }
    let mut d = r.clone();
    let mut kd = kx;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for it in 1..=max_iter {
        apply(&d, &mut kd);
        let dkd = dot(&d, &kd);
        if dkd <= 0.0 || !dkd.is_finite() {
            break;
        }
        let alpha = rr / dkd;
        axpy(alpha, &d, x);
        axpy(-alpha, &kd, &mut r);
        let rr_new = dot(&r, &r);
        rel = rr_new.sqrt() / b_norm;
        if rel <= tol {
            return CgOutcome {
                iterations: it,
                relative_residual: rel,
                converged: true,
            };
        }
        if best.as_ref().is_none_or(|(b, _)| rel < *b) {
            best = Some((rel, x.to_vec()));
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (di, ri) in d.iter_mut().zip(&r) {
            *di = ri + beta * *di;
        }
    }
    if let Some((b, xb)) = best {
        if b < rel {
            x.copy_from_slice(&xb);
            rel = b;
        }
    }
    CgOutcome {
        iterations: max_iter,
        relative_residual: rel,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // K = [[4, 1], [1, 3]], b = [1, 2] -> x = [1/11, 7/11]
        let k = [[4.0, 1.0], [1.0, 3.0]];
        let apply = |v: &[f64], out: &mut [f64]| {
            out[0] = k[0][0] * v[0] + k[0][1] * v[1];
            out[1] = k[1][0] * v[0] + k[1][1] * v[1];
        };
        let mut x = vec![0.0, 0.0];
        let out = conjugate_gradient(apply, &[1.0, 2.0], &mut x, 1e-14, 10);
        assert!(out.converged);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn warm_start_at_solution_exits_immediately() {
        let apply = |v: &[f64], out: &mut [f64]| out.copy_from_slice(v);
        let mut x = vec![3.0, -1.0];
        let out = conjugate_gradient(apply, &[3.0, -1.0], &mut x, 1e-12, 10);
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
    }
}
