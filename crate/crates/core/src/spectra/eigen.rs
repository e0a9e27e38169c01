//! Symmetric eigensolvers: a dense path backed by nalgebra and a Lanczos
//! iteration with full reorthogonalization and locking for larger matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sparse::CsrMatrix;
use crate::error::{HodgeError, Result};

/// Matrices with fewer rows than this go to the dense solver.
pub const DENSE_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unit eigenvectors, one per value.
    pub vectors: Vec<Vec<f64>>,
    /// ‖Av − λv‖ per pair.
    pub residuals: Vec<f64>,
    pub solver: SolverKind,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn residual(m: &CsrMatrix, lambda: f64, v: &[f64]) -> f64 {
    let mut r = m.matvec(v);
    axpy(&mut r, -lambda, v);
    dot(&r, &r).sqrt()
}

/// Every eigenpair of a symmetric matrix, ascending.
pub fn dense_eigen(m: &CsrMatrix) -> EigenPairs {
    let n = m.rows();
    if n == 0 {
        return EigenPairs { values: vec![], vectors: vec![], residuals: vec![], solver: SolverKind::Dense };
    }
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &m.to_dense()));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors: Vec<Vec<f64>> = order.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    let residuals = values.iter().zip(&vectors).map(|(l, v)| residual(m, *l, v)).collect();
    EigenPairs { values, vectors, residuals, solver: SolverKind::Dense }
}

/// Rough largest eigenvalue from a short Lanczos run.
pub fn largest_eigenvalue(m: &CsrMatrix) -> f64 {
    let n = m.rows();
    if n == 0 {
        return 0.0;
    }
    let steps = n.min(60);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a4c_205);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut q);
    let (alpha, beta, _) = lanczos_steps(m, &[], q, steps, |_, _| false);
    tridiagonal_eigen(&alpha, &beta).0.last().copied().unwrap_or(0.0).max(0.0)
}

type Basis = Vec<Vec<f64>>;

/// Runs up to `steps` Lanczos steps from `q0`, orthogonal to `locked`.
/// `stop(alpha, beta)` is polled after each step.
fn lanczos_steps<F: FnMut(&[f64], &[f64]) -> bool>(
    m: &CsrMatrix,
    locked: &[Vec<f64>],
    q0: Vec<f64>,
    steps: usize,
    mut stop: F,
) -> (Vec<f64>, Vec<f64>, Basis) {
    let mut basis: Basis = vec![q0];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    loop {
        let j = basis.len() - 1;
        let mut w = m.matvec(&basis[j]);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        axpy(&mut w, -a, &basis[j]);
        if j > 0 {
            axpy(&mut w, -beta[j - 1], &basis[j - 1]);
        }
        for _ in 0..2 {
            for q in locked.iter().chain(basis.iter()) {
                let c = dot(q, &w);
                axpy(&mut w, -c, q);
            }
        }
        let b = dot(&w, &w).sqrt();
        beta.push(b);
        let scale = alpha.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        if basis.len() >= steps || b <= 1e-13 * scale || stop(&alpha, &beta) {
            return (alpha, beta, basis);
        }
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
    }
}

/// Eigen-decomposition of the tridiagonal matrix with diagonal `alpha` and
/// off-diagonal `beta[..len-1]`. Returns ascending values and the matching
/// eigenvectors as columns of a row-major matrix.
fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (values, vectors)
}

/// The `k` smallest eigenpairs of a symmetric matrix by Lanczos with full
/// reorthogonalization. Pairs are found one at a time; each converged Ritz
/// vector is locked and later runs stay orthogonal to it.
///
/// A pair is accepted when ‖Av − λv‖ ≤ `tol`·max(1, λ_max).
pub fn lanczos_smallest(m: &CsrMatrix, k: usize, tol: f64) -> Result<EigenPairs> {
    let n = m.rows();
    let k = k.min(n);
    let scale = largest_eigenvalue(m).max(1.0);
    let max_steps = n.min(300);
    let restarts = 40;
    let mut rng = ChaCha8Rng::seed_from_u64(0x10c4ed);
    let mut locked: Basis = Vec::new();
    let mut values = Vec::new();
    let mut residuals = Vec::new();
    for _ in 0..k {
        let mut start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut best = None;
        for _ in 0..restarts {
            for _ in 0..2 {
                for q in &locked {
                    let c = dot(q, &start);
                    axpy(&mut start, -c, q);
                }
            }
            if normalize(&mut start) == 0.0 {
                break;
            }
            let remaining = n - locked.len();
            let mut check = 0usize;
            let (alpha, beta, basis) = lanczos_steps(m, &locked, start.clone(), max_steps.min(remaining), |a, b| {
                check += 1;
                if !check.is_multiple_of(8) {
                    return false;
                }
                let (_, vecs) = tridiagonal_eigen(a, b);
                let s_last = vecs[0][a.len() - 1];
                (b[b.len() - 1] * s_last).abs() <= 0.1 * tol * scale
            });
            let (vals, vecs) = tridiagonal_eigen(&alpha, &beta);
            let mut ritz = vec![0.0; n];
            for (q, s) in basis.iter().zip(&vecs[0]) {
                axpy(&mut ritz, *s, q);
            }
            normalize(&mut ritz);
            let res = residual(m, vals[0], &ritz);
            let done = res <= tol * scale;
            best = Some((vals[0], ritz.clone(), res));
            if done {
                break;
            }
            start = ritz;
        }
        let Some((lambda, v, res)) = best else {
            break;
        };
        if res > tol * scale {
            residuals.push(res);
            return Err(HodgeError::NotConverged { residuals });
        }
        values.push(lambda);
        residuals.push(res);
        locked.push(v);
    }
    // locking returns pairs in discovery order; sort to be safe
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok(EigenPairs {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: order.iter().map(|&i| locked[i].clone()).collect(),
        residuals: order.iter().map(|&i| residuals[i]).collect(),
        solver: SolverKind::Lanczos,
    })
}

/// The `k` smallest eigenpairs, dense below [`DENSE_LIMIT`] rows and Lanczos
/// above.
pub fn smallest_eigenpairs(m: &CsrMatrix, k: usize, tol: f64) -> Result<EigenPairs> {
    if m.rows() < DENSE_LIMIT {
        let mut all = dense_eigen(m);
        let k = k.min(all.values.len());
        all.values.truncate(k);
        all.vectors.truncate(k);
        all.residuals.truncate(k);
        Ok(all)
    } else {
        lanczos_smallest(m, k, tol)
    }
}
