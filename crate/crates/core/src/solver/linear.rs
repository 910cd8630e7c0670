use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Side};
use thiserror::Error;

use crate::dg::AssembledSystem;
use crate::sparse::CscMatrix;

/// Relative residual every returned solution satisfies.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("matrix is not positive definite (Cholesky and CG both failed, residual {residual:e}); gamma0 may be too small")]
    Indefinite { residual: f64 },
    #[error("matrix is {n}x{n} but the right-hand side has {len} entries")]
    Dimension { n: usize, len: usize },
    #[error("non-finite entry in the right-hand side")]
    NonFinite,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_residual(a: &CscMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    norm(&r) / norm(b)
}

/// Sparse Cholesky with the symbolic analysis kept across calls on the same
/// pattern, falling back to Jacobi-preconditioned conjugate gradients.
#[derive(Default)]
pub struct LinearSolver {
    symbolic: Option<(Vec<usize>, Vec<usize>, SymbolicLlt<usize>)>,
}

impl std::fmt::Debug for LinearSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearSolver")
            .field("cached_pattern", &self.symbolic.is_some())
            .finish()
    }
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&mut self, a: &CscMatrix, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        let n = a.n();
        if b.len() != n {
            return Err(SolveError::Dimension { n, len: b.len() });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::NonFinite);
        }
        if b.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; n]);
        }
        match self.cholesky(a, b) {
            Some(x) => Ok(x),
            None => {
                log::warn!("sparse Cholesky failed, falling back to preconditioned CG");
                let x = pcg(a, b, RESIDUAL_TOL * 0.1, 20 * n.max(100));
                let residual = relative_residual(a, &x, b);
                if residual <= RESIDUAL_TOL {
                    Ok(x)
                } else {
                    Err(SolveError::Indefinite { residual })
                }
            }
        }
    }

    fn cholesky(&mut self, a: &CscMatrix, b: &[f64]) -> Option<Vec<f64>> {
        let n = a.n();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, a.col_ptr(), None, a.row_idx());
        let reuse = matches!(&self.symbolic, Some((c, r, _)) if c == a.col_ptr() && r == a.row_idx());
        if !reuse {
            let s = SymbolicLlt::try_new(sym, Side::Lower).ok()?;
            self.symbolic = Some((a.col_ptr().to_vec(), a.row_idx().to_vec(), s));
        }
        let symbolic = self.symbolic.as_ref().map(|(_, _, s)| s.clone())?;
        let mat = SparseColMatRef::new(sym, a.values());
        let llt = Llt::try_new_with_symbolic(symbolic, mat, Side::Lower).ok()?;
        let solve = |rhs: &[f64]| -> Vec<f64> {
            let m = Mat::from_fn(n, 1, |i, _| rhs[i]);
            let x = llt.solve(&m);
            (0..n).map(|i| x[(i, 0)]).collect()
        };
        let mut x = solve(b);
        // iterative refinement against the assembled matrix
        for _ in 0..4 {
            if !x.iter().all(|v| v.is_finite()) {
                return None;
            }
            let ax = a.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            if norm(&r) <= 0.1 * RESIDUAL_TOL * norm(b) {
                break;
            }
            let dx = solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        (relative_residual(a, &x, b) <= RESIDUAL_TOL).then_some(x)
    }
}

/// Whether the sparse Cholesky factorization of `a` succeeds, i.e. `a` is
/// numerically positive definite.
pub fn cholesky_factorizes(a: &CscMatrix) -> bool {
    let n = a.n();
    let sym = SymbolicSparseColMatRef::new_checked(n, n, a.col_ptr(), None, a.row_idx());
    let Ok(symbolic) = SymbolicLlt::try_new(sym, Side::Lower) else {
        return false;
    };
    Llt::try_new_with_symbolic(symbolic, SparseColMatRef::new(sym, a.values()), Side::Lower).is_ok()
}

/// Conjugate gradients with a diagonal preconditioner.
pub fn pcg(a: &CscMatrix, b: &[f64], tol: f64, max_iter: usize) -> Vec<f64> {
    let n = a.n();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let target = tol * norm(b);
    for _ in 0..max_iter {
        if norm(&r) <= target {
            break;
        }
        let ap = a.matvec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

/// One-shot solve of an assembled system.
pub fn linear_solve(system: &AssembledSystem) -> Result<Vec<f64>, SolveError> {
    LinearSolver::new().solve(&system.matrix, &system.rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::Triplets;

    fn laplacian(n: usize) -> CscMatrix {
        let mut t = Triplets::default();
        for i in 0..n {
            t.push(i, i, 2.0);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
        }
        CscMatrix::from_triplets(n, &t)
    }

    #[test]
    fn identity_system() {
        let b = vec![1.0, -2.0, 3.5];
        let x = LinearSolver::new().solve(&CscMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn zero_rhs() {
        assert_eq!(LinearSolver::new().solve(&laplacian(5), &[0.0; 5]).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn laplacian_solution_and_cached_pattern() {
        let a = laplacian(50);
        let exact: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.matvec(&exact);
        let mut solver = LinearSolver::new();
        for _ in 0..2 {
            let x = solver.solve(&a, &b).unwrap();
            assert!(relative_residual(&a, &x, &b) <= RESIDUAL_TOL);
            assert!(x.iter().zip(&exact).all(|(p, q)| (p - q).abs() < 1e-9));
        }
    }

    #[test]
    fn pcg_agrees_with_cholesky() {
        let a = laplacian(30);
        let b: Vec<f64> = (0..30).map(|i| 1.0 + i as f64).collect();
        let x = pcg(&a, &b, 1e-13, 1000);
        assert!(relative_residual(&a, &x, &b) < 1e-12);
    }

    #[test]
    fn indefinite_is_reported() {
        let mut t = Triplets::default();
        t.push(0, 0, 1.0);
        t.push(1, 1, -1.0);
        let a = CscMatrix::from_triplets(2, &t);
        assert!(matches!(LinearSolver::new().solve(&a, &[1.0, 1.0]), Err(SolveError::Indefinite { .. })));
        assert!(!cholesky_factorizes(&a));
        assert!(cholesky_factorizes(&CscMatrix::identity(3)));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            LinearSolver::new().solve(&CscMatrix::identity(2), &[1.0]),
            Err(SolveError::Dimension { .. })
        ));
    }
}
