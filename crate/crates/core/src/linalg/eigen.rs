use super::cg::conjugate_gradient;
use super::vector::{dot, norm, scale};
use super::{CsrMatrix, LinalgError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Result of an iterative eigenvalue estimate. When `converged` is false the
/// value is the best estimate reached within the iteration cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fixed-seed Gaussian start vector. Structured choices fail on graph
/// matrices: all-ones is an eigenvector of `GᵀG + I`, and any arithmetic
/// progression is orthogonal to the top eigenvector `(1, -2, 1)` of a
/// three-node path.
fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let nv = norm(&v);
    scale(1.0 / nv, &mut v);
    v
}

fn gram_apply(m: &CsrMatrix, v: &[f64], rows: &mut [f64], out: &mut [f64]) {
    m.matvec_into(v, rows).expect("gram_apply sizes");
    m.matvec_transpose_into(rows, out).expect("gram_apply sizes");
}

/// Largest eigenvalue of `mᵀm` (that is `||m||₂²`) by power iteration with a
/// Rayleigh-quotient stopping test.
pub fn gram_top_eigenvalue(m: &CsrMatrix, tol: f64, max_iter: usize) -> Result<EigenEstimate, LinalgError> {
    if m.n_cols() == 0 || m.n_rows() == 0 {
        return Err(LinalgError::Empty);
    }
    if !(tol > 0.0) {
        return Err(LinalgError::BadTolerance(tol));
    }
    let mut v = start_vector(m.n_cols());
    let mut rows = vec![0.0; m.n_rows()];
    let mut w = vec![0.0; m.n_cols()];
    let mut lambda = f64::NAN;
    for it in 1..=max_iter {
        gram_apply(m, &v, &mut rows, &mut w);
        let next = dot(&v, &w);
        let wn = norm(&w);
        if wn == 0.0 {
            return Ok(EigenEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            });
        }
        let done = lambda.is_finite() && (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if done {
            return Ok(EigenEstimate {
                value: lambda,
                iterations: it,
                converged: true,
            });
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
    }
    log::warn!("power iteration did not converge in {max_iter} iterations (estimate {lambda})");
    Ok(EigenEstimate {
        value: lambda,
        iterations: max_iter,
        converged: false,
    })
}

/// Smallest eigenvalue of `mᵀm` by inverse power iteration, each step solving
/// `mᵀm z = v` with conjugate gradient. Returns 0 when `mᵀm` is numerically
/// singular.
pub fn gram_min_eigenvalue(m: &CsrMatrix, tol: f64, max_iter: usize) -> Result<EigenEstimate, LinalgError> {
    if m.n_cols() == 0 || m.n_rows() == 0 {
        return Err(LinalgError::Empty);
    }
    if !(tol > 0.0) {
        return Err(LinalgError::BadTolerance(tol));
    }
    let p = m.n_cols();
    let mut v = start_vector(p);
    let mut rows = vec![0.0; m.n_rows()];
    let mut z = vec![0.0; p];
    let mut lambda = f64::NAN;
    let cg_cap = 20 * p + 100;
    for it in 1..=max_iter {
        z.copy_from_slice(&v);
        let out = conjugate_gradient(|x, y| gram_apply(m, x, &mut rows, y), &v, &mut z, 1e-13, cg_cap);
        let zn = norm(&z);
        if !out.converged || !zn.is_finite() || zn == 0.0 {
            return Ok(EigenEstimate {
                value: 0.0,
                iterations: it,
                converged: out.converged,
            });
        }
        // Rayleigh quotient of the normalized iterate.
        for (vi, zi) in v.iter_mut().zip(&z) {
            *vi = zi / zn;
        }
        let mut w = vec![0.0; p];
        gram_apply(m, &v, &mut rows, &mut w);
        let next = dot(&v, &w);
        let done = lambda.is_finite() && (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if done {
            return Ok(EigenEstimate {
                value: lambda,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(EigenEstimate {
        value: lambda,
        iterations: max_iter,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_diagonal() {
        let e = gram_top_eigenvalue(&CsrMatrix::identity(4), 1e-12, 100).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12 && e.converged);
        let d = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]).unwrap();
        let e = gram_top_eigenvalue(&d, 1e-14, 10_000).unwrap();
        assert!((e.value - 9.0).abs() < 1e-9, "{e:?}");
        let e = gram_min_eigenvalue(&d, 1e-14, 10_000).unwrap();
        assert!((e.value - 1.0).abs() < 1e-9, "{e:?}");
    }

    #[test]
    fn path_graph_reaches_the_top_eigenvalue() {
        // Path 0-1-2: Laplacian eigenvalues 0, 1, 3, so AᵀA has 1, 2, 4.
        let g = CsrMatrix::from_dense(&[vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0]], 3).unwrap();
        let a = CsrMatrix::vstack(&g, &CsrMatrix::identity(3)).unwrap();
        let e = gram_top_eigenvalue(&a, 1e-14, 10_000).unwrap();
        assert!((e.value - 4.0).abs() < 1e-9, "{e:?}");
        let e = gram_min_eigenvalue(&a, 1e-14, 10_000).unwrap();
        assert!((e.value - 1.0).abs() < 1e-9, "{e:?}");
    }

    #[test]
    fn incidence_plus_identity_is_not_stuck_at_one() {
        // A = [1 -1 0; I]: AᵀA = GᵀG + I has top eigenvalue 3.
        let g = CsrMatrix::from_dense(&[vec![1.0, -1.0, 0.0]], 3).unwrap();
        let a = CsrMatrix::vstack(&g, &CsrMatrix::identity(3)).unwrap();
        let e = gram_top_eigenvalue(&a, 1e-14, 10_000).unwrap();
        assert!((e.value - 3.0).abs() < 1e-9, "{e:?}");
    }

    #[test]
    fn random_matches_dense_symmetric_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let dense: Vec<Vec<f64>> = (0..8)
            .map(|_| {
                (0..5)
                    .map(|_| {
                        if rng.random::<f64>() < 0.6 {
                            rng.random_range(-1.0..1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let m = CsrMatrix::from_dense(&dense, 5).unwrap();
        let a = nalgebra::DMatrix::from_fn(8, 5, |r, c| dense[r][c]);
        let gram = a.transpose() * &a;
        let eig = nalgebra::SymmetricEigen::new(gram);
        let top = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let bottom = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        let e = gram_top_eigenvalue(&m, 1e-15, 100_000).unwrap();
        assert!((e.value - top).abs() <= 1e-8 * top.max(1.0), "{} vs {top}", e.value);
        let e = gram_min_eigenvalue(&m, 1e-15, 100_000).unwrap();
        assert!(
            (e.value - bottom).abs() <= 1e-6 * top.max(1.0),
            "{} vs {bottom}",
            e.value
        );
    }

    #[test]
    fn rayleigh_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let trip: Vec<_> = (0..30)
            .map(|_| {
                (
                    rng.random_range(0..10),
                    rng.random_range(0..6),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let m = CsrMatrix::from_triplets(10, 6, &trip).unwrap();
        let top = gram_top_eigenvalue(&m, 1e-12, 10_000).unwrap().value;
        for _ in 0..50 {
            let u: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mu = m.matvec(&u).unwrap();
            let q = dot(&mu, &mu) / dot(&u, &u);
            assert!(top >= q - 1e-9 * top);
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(gram_top_eigenvalue(&CsrMatrix::zeros(0, 3), 1e-6, 10).is_err());
        assert!(gram_top_eigenvalue(&CsrMatrix::identity(2), 0.0, 10).is_err());
        let e = gram_top_eigenvalue(&CsrMatrix::zeros(2, 3), 1e-6, 10).unwrap();
        assert_eq!(e.value, 0.0);
    }
}
