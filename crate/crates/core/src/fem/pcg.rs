//! Conjugate gradient with Jacobi (diagonal) preconditioning.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct PcgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual `|Ax - b| / |b|`.
    pub residual: f64,
    /// Preconditioned residual norm per iteration (index 0 is the initial
    /// residual).
    pub residual_history: Vec<f64>,
    /// Per-iteration drop of the squared energy error,
    /// `|e_{k-1}|_A^2 - |e_k|_A^2 = alpha_k (r^T z)_k`; CG decreases the
    /// energy error monotonically, so these are non-negative.
    pub energy_decrements: Vec<f64>,
}

/// Default iteration budget: `50 sqrt(N)`, well past the point where
/// discretization error dominates.
pub fn default_max_iter(n: usize) -> usize {
    (50.0 * (n.max(1) as f64).sqrt()).ceil() as usize
}

/// Solves `A x = b` for SPD `A` to `|Ax - b| <= rel_tol |b|`.
///
/// `x0` warm-starts the iteration. Directions of non-positive curvature
/// abort with [`Error::NotSpd`]; running out of iterations aborts with
/// [`Error::NoConvergence`] carrying the final residual.
pub fn pcg_solve(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
    x0: Option<&[f64]>,
) -> Result<PcgSolution> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::Dimension("pcg shape mismatch".into()));
    }
    if n == 0 {
        return Ok(PcgSolution {
            x: Vec::new(),
            iterations: 0,
            residual: 0.0,
            residual_history: vec![0.0],
            energy_decrements: Vec::new(),
        });
    }
    let norm_b = norm(b);
    if norm_b == 0.0 {
        return Ok(PcgSolution {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            residual_history: vec![0.0],
            energy_decrements: Vec::new(),
        });
    }
    let diag = a.diagonal();
    let mut inv_diag = vec![0.0; n];
    for (i, &d) in diag.iter().enumerate() {
        if d <= 0.0 {
            return Err(Error::NotSpd { iteration: 0 });
        }
        inv_diag[i] = 1.0 / d;
    }

    let mut x = match x0 {
        Some(x0) => {
            assert_eq!(x0.len(), n);
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let ax = a.mul_vec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = vec![rz.max(0.0).sqrt()];
    let mut decrements = Vec::new();
    let tol = rel_tol * norm_b;
    if norm(&r) <= tol {
        return Ok(PcgSolution {
            x,
            iterations: 0,
            residual: norm(&r) / norm_b,
            residual_history: history,
            energy_decrements: decrements,
        });
    }

    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotSpd { iteration: it });
        }
        let alpha = rz / pap;
        decrements.push(alpha * rz);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        history.push(rz_new.max(0.0).sqrt());
        if norm(&r) <= tol {
            return Ok(PcgSolution {
                x,
                iterations: it,
                residual: norm(&r) / norm_b,
                residual_history: history,
                energy_decrements: decrements,
            });
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: norm(&r) / norm_b,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Sequential on purpose: keeps results independent of thread count.
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 0.0];
        let sol = pcg_solve(&a, &b, 1e-12, 10, None).unwrap();
        assert_eq!(sol.iterations, 1);
        for (xi, bi) in sol.x.iter().zip(&b) {
            assert_relative_eq!(xi, bi, epsilon = 1e-14);
        }
    }

    #[test]
    fn jacobi_is_exact_for_diagonal_matrices() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 4.0), (1, 1, 2.0), (2, 2, 0.5)])
            .unwrap();
        let b = vec![8.0, 4.0, 1.0];
        let sol = pcg_solve(&a, &b, 1e-12, 10, None).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_relative_eq!(sol.x[0], 2.0, epsilon = 1e-13);
        assert_relative_eq!(sol.x[1], 2.0, epsilon = 1e-13);
        assert_relative_eq!(sol.x[2], 2.0, epsilon = 1e-13);
    }

    #[test]
    fn non_spd_matrix_is_detected() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        let err = pcg_solve(&a, &[1.0, 1.0], 1e-10, 10, None).unwrap_err();
        assert!(matches!(err, Error::NotSpd { .. }));
    }

    #[test]
    fn iteration_budget_is_reported() {
        // Tridiagonal SPD system, absurdly tight budget.
        let mut t = Vec::new();
        let n = 50;
        for i in 0..n {
            t.push((i as u32, i as u32, 2.0));
            if i + 1 < n {
                t.push((i as u32, i as u32 + 1, -1.0));
                t.push((i as u32 + 1, i as u32, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, t).unwrap();
        let err = pcg_solve(&a, &vec![1.0; n], 1e-14, 2, None).unwrap_err();
        match err {
            Error::NoConvergence {
                iterations,
                residual,
            } => {
                assert_eq!(iterations, 2);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = CsrMatrix::identity(4);
        let sol = pcg_solve(&a, &[0.0; 4], 1e-10, 10, None).unwrap();
        assert_eq!(sol.x, vec![0.0; 4]);
        assert_eq!(sol.iterations, 0);
    }
}
