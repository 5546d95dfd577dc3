//! Smallest eigenpairs of symmetric definite pencils `A x = λ B x`.

use super::{EnvelopeCholesky, LinalgError, SparseMatrix, DENSE_CROSSOVER};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_EIG_TOL: f64 = 1e-10;
pub const DEFAULT_NULL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigMethod {
    /// Dense below the crossover dimension, Lanczos above it.
    Auto,
    Dense,
    /// Shift-invert Lanczos; only valid with B-orthogonal deflation of an
    /// A-invariant subspace.
    Lanczos,
}

#[derive(Debug, Clone)]
pub struct EigOptions {
    /// Relative residual target `|Ax - λBx| <= tol * max(λ, shift) * |Bx|`.
    pub tol: f64,
    pub method: EigMethod,
    pub dense_crossover: usize,
    pub seed: u64,
    /// Upper bound on the Lanczos basis size per restart.
    pub max_subspace: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            tol: DEFAULT_EIG_TOL,
            method: EigMethod::Auto,
            dense_crossover: DENSE_CROSSOVER,
            seed: 0x6b6f726e,
            max_subspace: 600,
        }
    }
}

/// Subspace excluded from the search.
#[derive(Debug, Clone, Copy)]
pub enum Deflation<'a> {
    None,
    /// Search the B-orthogonal complement of the column span. The span
    /// should be invariant under the pencil for the Lanczos path; the dense
    /// path accepts any span.
    BOrthogonal(&'a DMatrix<f64>),
    /// Search `{x : C^T x = 0}`; always solved densely.
    Constraints(&'a DMatrix<f64>),
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ascending Rayleigh quotients.
    pub values: Vec<f64>,
    /// B-orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<f64>,
    /// `|A x - λ B x|` for B-normalized `x`.
    pub residuals: Vec<f64>,
    /// Dimension of the space that was searched.
    pub search_dim: usize,
}

impl EigenResult {
    fn empty(n: usize) -> Self {
        EigenResult { values: Vec::new(), vectors: DMatrix::zeros(n, 0), residuals: Vec::new(), search_dim: 0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i).iter().copied().collect()
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Orthonormal basis of the orthogonal complement of the column span of `c`,
/// via column-pivoted Householder QR. Columns whose remaining norm falls
/// below `rel_tol` times the largest column norm are treated as dependent.
pub fn orthonormal_complement(c: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = c.nrows();
    let p = c.ncols();
    let mut r = c.clone();
    let scale = (0..p).map(|j| r.column(j).norm()).fold(0.0, f64::max);
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::new();
    if scale > 0.0 {
        for j in 0..n.min(p) {
            let (mut best, mut best_norm) = (j, -1.0);
            for q in j..p {
                let col = r.column(q);
                let s: f64 = col.as_slice()[j..].iter().map(|v| v * v).sum();
                if s > best_norm {
                    best = q;
                    best_norm = s;
                }
            }
            if best_norm.sqrt() <= rel_tol * scale {
                break;
            }
            r.swap_columns(j, best);
            let x: Vec<f64> = r.column(j).as_slice()[j..].to_vec();
            let xn = norm(&x);
            let alpha = if x[0] >= 0.0 { -xn } else { xn };
            let mut v = x;
            v[0] -= alpha;
            let vn2 = dot(&v, &v);
            let tau = if vn2 > 0.0 { 2.0 / vn2 } else { 0.0 };
            for q in j..p {
                let mut col = r.column_mut(q);
                let cs = &mut col.as_mut_slice()[j..];
                let d = tau * dot(&v, cs);
                for (ci, vi) in cs.iter_mut().zip(&v) {
                    *ci -= d * vi;
                }
            }
            reflectors.push((v, tau));
        }
    }
    let rank = reflectors.len();
    let m = n - rank;
    let mut e = DMatrix::zeros(n, m);
    for i in 0..m {
        e[(rank + i, i)] = 1.0;
    }
    for (j, (v, tau)) in reflectors.iter().enumerate().rev() {
        for q in 0..m {
            let mut col = e.column_mut(q);
            let cs = &mut col.as_mut_slice()[j..];
            let d = tau * dot(v, cs);
            if d != 0.0 {
                for (ci, vi) in cs.iter_mut().zip(v) {
                    *ci -= d * vi;
                }
            }
        }
    }
    e
}

/// B-orthonormal basis of the column span of `y`, dropping directions whose
/// B-Gram eigenvalue is below `1e-10` of the largest.
pub fn b_orthonormalize(b: &SparseMatrix, y: &DMatrix<f64>) -> DMatrix<f64> {
    b_orthonormalize_with(|m| b.mul_dense(m), y)
}

fn b_orthonormalize_with(bmul: impl Fn(&DMatrix<f64>) -> DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    if y.ncols() == 0 {
        return y.clone();
    }
    let mut basis = y.clone();
    for _pass in 0..2 {
        let by = bmul(&basis);
        let g = basis.transpose() * &by;
        let g = (&g + g.transpose()) * 0.5;
        let eig = SymmetricEigen::new(g);
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
        let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > 1e-10 * lmax).collect();
        let mut w = DMatrix::zeros(basis.ncols(), keep.len());
        for (c, &i) in keep.iter().enumerate() {
            let s = 1.0 / eig.eigenvalues[i].sqrt();
            for r in 0..basis.ncols() {
                w[(r, c)] = eig.eigenvectors[(r, i)] * s;
            }
        }
        basis = &basis * w;
    }
    basis
}

/// Dense generalized solve on the subspace spanned by the columns of `z`
/// (all of R^n when `z` is `None`). Returns eigenvalues ascending and the
/// corresponding eigenvectors in full coordinates.
fn dense_pencil(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    z: Option<&DMatrix<f64>>,
    want_vectors: bool,
) -> Result<(Vec<f64>, DMatrix<f64>), LinalgError> {
    let (ar, br) = match z {
        Some(z) => {
            let zt = z.transpose();
            (&zt * (a * z), &zt * (b * z))
        }
        None => (a.clone(), b.clone()),
    };
    let m = ar.nrows();
    if m == 0 {
        return Ok((Vec::new(), DMatrix::zeros(a.nrows(), 0)));
    }
    let ar = (&ar + ar.transpose()) * 0.5;
    let br = (&br + br.transpose()) * 0.5;
    let chol = br.cholesky().ok_or(LinalgError::IndefiniteB)?;
    let l = chol.l();
    // C = L^{-1} Ar L^{-T}
    let x = l.solve_lower_triangular(&ar).ok_or(LinalgError::IndefiniteB)?;
    let c = l.solve_lower_triangular(&x.transpose()).ok_or(LinalgError::IndefiniteB)?;
    let c = (&c + c.transpose()) * 0.5;
    if !want_vectors {
        let mut vals: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        return Ok((vals, DMatrix::zeros(a.nrows(), 0)));
    }
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let ysorted = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    let lt = l.transpose();
    let v = lt.solve_upper_triangular(&ysorted).ok_or(LinalgError::IndefiniteB)?;
    let full = match z {
        Some(z) => z * v,
        None => v,
    };
    Ok((vals, full))
}

/// Rayleigh quotients, B-normalization and residuals of candidate vectors.
fn finish(
    amul: &dyn Fn(&[f64]) -> Vec<f64>,
    bmul: &dyn Fn(&[f64]) -> Vec<f64>,
    vectors: DMatrix<f64>,
    search_dim: usize,
) -> EigenResult {
    let n = vectors.nrows();
    let k = vectors.ncols();
    let mut out = DMatrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for c in 0..k {
        let mut x: Vec<f64> = vectors.column(c).iter().copied().collect();
        let bx = bmul(&x);
        let s = dot(&x, &bx).sqrt();
        x.iter_mut().for_each(|v| *v /= s);
        let ax = amul(&x);
        let bx = bmul(&x);
        let lam = dot(&x, &ax) / dot(&x, &bx);
        let r: Vec<f64> = ax.iter().zip(&bx).map(|(a, b)| a - lam * b).collect();
        residuals.push(norm(&r));
        values.push(lam);
        out.column_mut(c).copy_from_slice(&x);
    }
    // Rayleigh quotients can reorder nearly equal values; keep ascending
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    EigenResult {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: DMatrix::from_fn(n, k, |r, c| out[(r, order[c])]),
        residuals: order.iter().map(|&i| residuals[i]).collect(),
        search_dim,
    }
}

/// The `k` smallest eigenpairs of the dense pencil `(a, b)`, optionally
/// restricted to `{x : C^T x = 0}`.
pub fn eig_smallest_dense(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    k: usize,
    constraints: Option<&DMatrix<f64>>,
) -> Result<EigenResult, LinalgError> {
    let n = a.nrows();
    if b.nrows() != n || a.ncols() != n || b.ncols() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "pencil {}x{} / {}x{}",
            n,
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let z = constraints.filter(|c| c.ncols() > 0).map(|c| orthonormal_complement(c, 1e-10));
    let dim = z.as_ref().map_or(n, |z| z.ncols());
    if k == 0 || dim == 0 {
        return Ok(EigenResult { search_dim: dim, ..EigenResult::empty(n) });
    }
    let (_, vecs) = dense_pencil(a, b, z.as_ref(), true)?;
    let k = k.min(dim);
    let sel = vecs.columns(0, k).into_owned();
    let amul = |x: &[f64]| (a * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec();
    let bmul = |x: &[f64]| (b * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec();
    Ok(finish(&amul, &bmul, sel, dim))
}

/// The `k` smallest eigenpairs of `A x = λ B x` on the complement of the
/// deflation space.
pub fn eig_smallest(
    a: &SparseMatrix,
    b: &SparseMatrix,
    k: usize,
    deflation: Deflation<'_>,
    opts: &EigOptions,
) -> Result<EigenResult, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "pencil {}x{} / {}x{}",
            n,
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let use_lanczos = match (opts.method, deflation) {
        (_, Deflation::Constraints(_)) => false,
        (EigMethod::Dense, _) => false,
        (EigMethod::Lanczos, _) => true,
        (EigMethod::Auto, _) => n >= opts.dense_crossover,
    };
    if n == 0 || k == 0 {
        return Ok(EigenResult::empty(n));
    }
    if !use_lanczos {
        let c = match deflation {
            Deflation::None => None,
            Deflation::BOrthogonal(y) => Some(b.mul_dense(y)),
            Deflation::Constraints(c) => Some(c.clone()),
        };
        if n >= opts.dense_crossover {
            log::warn!("dense eigensolve of dimension {n}");
        }
        let r = eig_smallest_dense(&a.to_dense(), &b.to_dense(), k, c.as_ref())?;
        let sel = r.vectors;
        return Ok(finish(&|x| a.mul_vec(x), &|x| b.mul_vec(x), sel, r.search_dim));
    }
    let y = match deflation {
        Deflation::BOrthogonal(y) => Some(y),
        _ => None,
    };
    lanczos_smallest(a, b, k, y, opts)
}

struct Lanczos<'a> {
    a: &'a SparseMatrix,
    b: &'a SparseMatrix,
    shift: f64,
    factor: EnvelopeCholesky,
    /// fixed B-orthonormal vectors (deflation and locked) with their B-images
    fixed: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Lanczos<'_> {
    fn project(&self, w: &mut [f64], basis: &[(Vec<f64>, Vec<f64>)]) {
        for (u, bu) in self.fixed.iter().chain(basis) {
            let c = dot(bu, w);
            if c != 0.0 {
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= c * ui;
                }
            }
        }
    }

    /// Runs up to `m` steps; returns the tridiagonal coefficients and basis.
    fn run(&self, start: Vec<f64>, m: usize) -> (Vec<f64>, Vec<f64>, Vec<(Vec<f64>, Vec<f64>)>) {
        let mut q = start;
        let mut basis: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(m);
        self.project(&mut q, &[]);
        self.project(&mut q, &[]);
        let bq = self.b.mul_vec(&q);
        let s = dot(&q, &bq).sqrt();
        if !(s > 0.0) {
            return (Vec::new(), Vec::new(), basis);
        }
        basis.push((q.iter().map(|v| v / s).collect(), bq.iter().map(|v| v / s).collect()));
        let mut alphas = Vec::with_capacity(m);
        let mut betas = Vec::with_capacity(m);
        for j in 0..m {
            let mut w = self.factor.solve(&basis[j].1);
            let alpha = dot(&basis[j].1, &w);
            alphas.push(alpha);
            // full reorthogonalization, twice
            self.project(&mut w, &basis);
            self.project(&mut w, &basis);
            if j + 1 == m {
                break;
            }
            let bw = self.b.mul_vec(&w);
            let beta = dot(&w, &bw).max(0.0).sqrt();
            let scale = alphas.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            if beta <= 1e-13 * scale {
                break;
            }
            betas.push(beta);
            basis.push((w.iter().map(|v| v / beta).collect(), bw.iter().map(|v| v / beta).collect()));
        }
        (alphas, betas, basis)
    }

    /// Ritz pairs `(λ, x)` of the pencil, ascending in λ.
    fn ritz(&self, alphas: &[f64], betas: &[f64], basis: &[(Vec<f64>, Vec<f64>)]) -> Vec<(f64, Vec<f64>)> {
        let m = alphas.len();
        if m == 0 {
            return Vec::new();
        }
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let n = basis[0].0.len();
        order
            .into_iter()
            .map(|i| {
                let theta = eig.eigenvalues[i];
                let mut x = vec![0.0; n];
                for (r, (q, _)) in basis.iter().take(m).enumerate() {
                    let c = eig.eigenvectors[(r, i)];
                    for (xi, qi) in x.iter_mut().zip(q) {
                        *xi += c * qi;
                    }
                }
                (1.0 / theta - self.shift, x)
            })
            .collect()
    }

    /// B-normalized Rayleigh quotient and convergence test.
    fn check(&self, x: &mut [f64], tol: f64) -> (f64, f64, bool) {
        let bx = self.b.mul_vec(x);
        let s = dot(x, &bx).sqrt();
        x.iter_mut().for_each(|v| *v /= s);
        let ax = self.a.mul_vec(x);
        let bx: Vec<f64> = bx.iter().map(|v| v / s).collect();
        let lam = dot(x, &ax);
        let r: Vec<f64> = ax.iter().zip(&bx).map(|(a, b)| a - lam * b).collect();
        let rn = norm(&r);
        let ok = rn <= tol * lam.abs().max(self.shift) * norm(&bx);
        (lam, rn, ok)
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn lanczos_smallest(
    a: &SparseMatrix,
    b: &SparseMatrix,
    k: usize,
    y: Option<&DMatrix<f64>>,
    opts: &EigOptions,
) -> Result<EigenResult, LinalgError> {
    let n = a.nrows();
    let yb = match y {
        Some(y) if y.ncols() > 0 => b_orthonormalize(b, y),
        _ => DMatrix::zeros(n, 0),
    };
    let avail = n - yb.ncols();
    let k = k.min(avail);
    if k == 0 {
        return Ok(EigenResult { search_dim: avail, ..EigenResult::empty(n) });
    }
    let (ta, tb) = (a.trace(), b.trace());
    let shift = if ta > 0.0 && tb > 0.0 { 1e-4 * ta / tb } else { 1.0 };
    let shifted = a.add_scaled(b, shift);
    let factor = EnvelopeCholesky::new(&shifted).map_err(|_| LinalgError::IndefiniteB)?;
    let mut fixed = Vec::new();
    for c in 0..yb.ncols() {
        let v: Vec<f64> = yb.column(c).iter().copied().collect();
        let bv = b.mul_vec(&v);
        fixed.push((v, bv));
    }
    let mut lz = Lanczos { a, b, shift, factor, fixed };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();
    let base_m = (3 * k + 30).max(60);
    let mut m = base_m.min(avail).min(opts.max_subspace.max(k + 1));
    let mut stalls = 0;
    let mut replacements = 0;
    loop {
        let remaining = avail - locked.len();
        if remaining == 0 {
            break;
        }
        let (al, be, basis) = lz.run(random_vector(&mut rng, n), m.min(remaining));
        let mut ritz = lz.ritz(&al, &be, &basis);
        if locked.len() < k {
            // one pair per pass: a single Krylov space sees only one
            // vector of a multiple eigenvalue, so later Ritz pairs may skip copies
            let mut accepted = false;
            if let Some((_, x)) = ritz.first_mut() {
                let (lam, _, ok) = lz.check(x, opts.tol);
                if ok {
                    locked.push((lam, x.clone()));
                    accepted = true;
                }
            }
            if !accepted {
                stalls += 1;
                let cap = avail.min(opts.max_subspace.max(k + 1));
                if m >= cap && stalls > 6 {
                    let res = ritz.first_mut().map(|(_, x)| lz.check(x, opts.tol).1).unwrap_or(f64::NAN);
                    return Err(LinalgError::NonConvergence { iterations: stalls, residual: res });
                }
                m = (2 * m).min(cap);
            }
        } else {
            // verification: the complement must not hold a smaller eigenvalue
            let Some((_, x)) = ritz.first_mut() else { break };
            let (lam, _, ok) = lz.check(x, opts.tol);
            let (idx, worst) = locked
                .iter()
                .enumerate()
                .map(|(i, p)| (i, p.0))
                .fold((0, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
            if !ok || lam >= worst - opts.tol * worst.abs().max(shift) || replacements >= 5 {
                break;
            }
            log::debug!("lanczos verification replaced {worst:e} by {lam:e}");
            locked.remove(idx);
            locked.push((lam, x.clone()));
            replacements += 1;
        }
        lz.fixed.truncate(yb.ncols());
        for (_, x) in &locked {
            let bx = b.mul_vec(x);
            lz.fixed.push((x.clone(), bx));
        }
        // B-orthonormalize the locked set against itself for stability
        let nl = locked.len();
        for i in yb.ncols()..yb.ncols() + nl {
            let (head, tail) = lz.fixed.split_at_mut(i);
            let (v, bv) = &mut tail[0];
            for (u, bu) in head.iter() {
                let c = dot(bu, v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
            }
            *bv = b.mul_vec(v);
            let s = dot(v, bv).sqrt();
            v.iter_mut().for_each(|t| *t /= s);
            bv.iter_mut().for_each(|t| *t /= s);
        }
        for (j, (_, x)) in locked.iter_mut().enumerate() {
            x.clone_from(&lz.fixed[yb.ncols() + j].0);
        }
    }
    let mut vecs = DMatrix::zeros(n, locked.len());
    for (c, (_, x)) in locked.iter().enumerate() {
        vecs.column_mut(c).copy_from_slice(x);
    }
    Ok(finish(&|x| a.mul_vec(x), &|x| b.mul_vec(x), vecs, avail))
}

/// Basis of the numerical null space of a pencil restricted to the
/// complement of the deflation space: all eigenvectors with
/// `λ <= rel_tol * λ_max`.
#[derive(Debug, Clone)]
pub struct NullSpace {
    /// B-orthonormal basis, one vector per column.
    pub basis: DMatrix<f64>,
    pub lambda_max: f64,
    /// Smallest eigenvalue above the threshold, if any was computed.
    pub gap: Option<f64>,
}

impl NullSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Orthonormal basis of the numerical null space of a symmetric PSD matrix.
pub fn null_space(a: &SparseMatrix, rel_tol: f64) -> Result<NullSpace, LinalgError> {
    let id = SparseMatrix::identity(a.nrows());
    null_space_pencil(a, &id, Deflation::None, rel_tol, &EigOptions::default())
}

/// Null space of `A` relative to `B` on the complement of `deflation`.
pub fn null_space_pencil(
    a: &SparseMatrix,
    b: &SparseMatrix,
    deflation: Deflation<'_>,
    rel_tol: f64,
    opts: &EigOptions,
) -> Result<NullSpace, LinalgError> {
    let n = a.nrows();
    let lanczos = !matches!(deflation, Deflation::Constraints(_))
        && (opts.method == EigMethod::Lanczos || (opts.method == EigMethod::Auto && n >= opts.dense_crossover));
    if !lanczos {
        let c = match deflation {
            Deflation::None => None,
            Deflation::BOrthogonal(y) => Some(b.mul_dense(y)),
            Deflation::Constraints(c) => Some(c.clone()),
        };
        let z = c.filter(|c| c.ncols() > 0).map(|c| orthonormal_complement(&c, 1e-10));
        let (ad, bd) = (a.to_dense(), b.to_dense());
        let (vals, vecs) = dense_pencil(&ad, &bd, z.as_ref(), true)?;
        let lambda_max = vals.last().copied().unwrap_or(0.0).max(0.0);
        let thresh = rel_tol * lambda_max;
        let dim = vals.iter().take_while(|&&v| v <= thresh).count();
        let sel = vecs.columns(0, dim).into_owned();
        let basis = if dim > 0 { b_orthonormalize(b, &sel) } else { sel };
        return Ok(NullSpace { basis, lambda_max, gap: vals.get(dim).copied() });
    }
    let lambda_max = estimate_lambda_max(a, b)?;
    let thresh = rel_tol * lambda_max;
    let mut k = 4;
    loop {
        let r = eig_smallest(a, b, k, deflation, opts)?;
        let dim = r.values.iter().take_while(|&&v| v <= thresh).count();
        if dim < r.len() || r.len() < k {
            let sel = r.vectors.columns(0, dim).into_owned();
            return Ok(NullSpace { basis: sel, lambda_max, gap: r.values.get(dim).copied() });
        }
        k *= 2;
    }
}

/// Largest eigenvalue of `(A, B)` by power iteration on `B^{-1} A`,
/// inflated by 10% to bound it from above in practice.
fn estimate_lambda_max(a: &SparseMatrix, b: &SparseMatrix) -> Result<f64, LinalgError> {
    let n = a.nrows();
    let fb = EnvelopeCholesky::new(b).map_err(|_| LinalgError::IndefiniteB)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut x = random_vector(&mut rng, n);
    let mut lam = 0.0;
    for _ in 0..100 {
        let ax = a.mul_vec(&x);
        let y = fb.solve(&ax);
        let by = b.mul_vec(&y);
        let yb = dot(&y, &by).sqrt();
        if yb == 0.0 {
            return Ok(0.0);
        }
        let bx = b.mul_vec(&x);
        lam = dot(&x, &ax) / dot(&x, &bx);
        x = y.iter().map(|v| v / yb).collect();
    }
    Ok(1.1 * lam)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pencil() {
        let i = SparseMatrix::identity(5);
        let r = eig_smallest(&i, &i, 1, Deflation::None, &EigOptions::default()).unwrap();
        assert!((r.values[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_deflated() {
        let a = SparseMatrix::diagonal(&[0.0, 1.0, 2.0]);
        let b = SparseMatrix::identity(3);
        let e0 = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        for method in [EigMethod::Dense, EigMethod::Lanczos] {
            let opts = EigOptions { method, ..Default::default() };
            let r = eig_smallest(&a, &b, 1, Deflation::BOrthogonal(&e0), &opts).unwrap();
            assert!((r.values[0] - 1.0).abs() < 1e-12, "{method:?}: {:?}", r.values);
        }
    }

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        let c = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 2.0, 2.0, 0.0, 0.0, 1.0, 1.0]);
        let z = orthonormal_complement(&c, 1e-12);
        assert_eq!(z.ncols(), 3);
        assert!((z.transpose() * &z - DMatrix::identity(3, 3)).norm() < 1e-14);
        assert!((c.transpose() * &z).norm() < 1e-14);
    }

    #[test]
    fn null_space_of_diagonal() {
        let a = SparseMatrix::diagonal(&[0.0, 0.0, 1.0]);
        assert_eq!(null_space(&a, DEFAULT_NULL_TOL).unwrap().dim(), 2);
        let spd = SparseMatrix::diagonal(&[1.0, 2.0, 3.0]);
        assert_eq!(null_space(&spd, DEFAULT_NULL_TOL).unwrap().dim(), 0);
    }
}
