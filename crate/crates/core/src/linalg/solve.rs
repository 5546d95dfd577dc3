//! Symmetric positive definite linear solves.

use super::{EnvelopeCholesky, LinalgError, SparseMatrix, DENSE_CROSSOVER};
use nalgebra::{DMatrix, DVector};

/// Default relative residual target of [`solve_spd`].
pub const DEFAULT_SOLVE_TOL: f64 = 1e-12;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Solves `A x = b` for symmetric positive definite `A`.
///
/// Below [`DENSE_CROSSOVER`] unknowns a dense Cholesky factorization is used
/// (with residual-driven refinement); above it, Jacobi-preconditioned CG.
/// The returned `x` satisfies `|b - A x| <= tol |b|`.
pub fn solve_spd(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>, LinalgError> {
    let n = a.nrows();
    if b.len() != n || a.ncols() != n {
        return Err(LinalgError::DimensionMismatch(format!("matrix {}x{}, rhs {}", n, a.ncols(), b.len())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(vec![0.0; n]);
    }
    if n < DENSE_CROSSOVER {
        let chol = a.to_dense().cholesky().ok_or(LinalgError::NotPositiveDefinite { index: 0 })?;
        let mut x = chol.solve(&DVector::from_column_slice(b));
        let mut res = f64::INFINITY;
        for _ in 0..4 {
            let r: Vec<f64> = a.mul_vec(x.as_slice()).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
            res = norm(&r) / bn;
            if res <= tol {
                return Ok(x.as_slice().to_vec());
            }
            x += chol.solve(&DVector::from_vec(r));
        }
        return Err(LinalgError::NonConvergence { iterations: 4, residual: res });
    }
    pcg(a, b, tol, 20 * n + 100)
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
pub fn pcg(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, LinalgError> {
    let n = a.nrows();
    let dinv: Vec<f64> = a.diag().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let bn = norm(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let res = norm(&r) / bn;
        if res <= tol {
            return Ok(x);
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(LinalgError::Breakdown(format!("CG curvature {pap:e} at iteration {it}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        // recompute the true residual periodically to avoid drift
        if it % 50 == 49 {
            let ax = a.mul_vec(&x);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = norm(&r) / bn;
    if res <= tol {
        Ok(x)
    } else {
        Err(LinalgError::NonConvergence { iterations: max_iter, residual: res })
    }
}

/// A reusable factorization of an SPD matrix.
#[derive(Debug, Clone)]
pub enum SpdFactor {
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Envelope(EnvelopeCholesky),
}

impl SpdFactor {
    /// Dense Cholesky below the crossover, envelope Cholesky above it.
    pub fn new(a: &SparseMatrix) -> Result<Self, LinalgError> {
        if a.nrows() < DENSE_CROSSOVER {
            let d: DMatrix<f64> = a.to_dense();
            d.cholesky().map(SpdFactor::Dense).ok_or(LinalgError::NotPositiveDefinite { index: 0 })
        } else {
            EnvelopeCholesky::new(a).map(SpdFactor::Envelope)
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            SpdFactor::Dense(c) => c.solve(&DVector::from_column_slice(b)).as_slice().to_vec(),
            SpdFactor::Envelope(c) => c.solve(b),
        }
    }
}
