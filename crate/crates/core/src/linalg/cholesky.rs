//! Envelope (skyline) Cholesky factorization with reverse Cuthill-McKee ordering.

use super::{LinalgError, SparseMatrix};
use std::collections::VecDeque;

/// `P A P^T = L L^T` with `L` stored row-wise over its envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// first column of the envelope of each permuted row
    first: Vec<usize>,
    /// offset of row `i` in `vals`; row `i` holds columns `first[i]..=i`
    start: Vec<usize>,
    vals: Vec<f64>,
}

/// Reverse Cuthill-McKee ordering of the symmetric pattern of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(a: &SparseMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n).map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect()).collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];

    // BFS that returns the last node reached and the eccentricity
    let bfs_far = |root: usize, level: &mut Vec<usize>, visited: &[bool]| -> (usize, usize) {
        let mut touched = vec![root];
        level[root] = 0;
        let mut q = VecDeque::from([root]);
        let mut far = (root, 0);
        while let Some(u) = q.pop_front() {
            let lu = level[u];
            if lu > far.1 || (lu == far.1 && degree[u] < degree[far.0]) {
                far = (u, lu);
            }
            for &w in &adj[u] {
                if !visited[w] && level[w] == usize::MAX {
                    level[w] = lu + 1;
                    touched.push(w);
                    q.push_back(w);
                }
            }
        }
        for t in touched {
            level[t] = usize::MAX;
        }
        far
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start node
        let mut root = seed;
        let mut ecc = 0;
        for _ in 0..8 {
            let (far, e) = bfs_far(root, &mut level, &visited);
            if e <= ecc {
                break;
            }
            root = far;
            ecc = e;
        }
        let begin = order.len();
        visited[root] = true;
        order.push(root);
        let mut head = begin;
        let mut nbrs: Vec<usize> = Vec::new();
        while head < order.len() {
            let u = order[head];
            head += 1;
            nbrs.clear();
            nbrs.extend(adj[u].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                visited[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

impl EnvelopeCholesky {
    /// Factors a symmetric positive definite matrix.
    pub fn new(a: &SparseMatrix) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LinalgError::DimensionMismatch(format!("{}x{} is not square", n, a.ncols())));
        }
        let perm = rcm_ordering(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for (oj, _) in a.row(old) {
                let j = inv[oj];
                if j < i && j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut vals = vec![0.0; start[n]];
        for old in 0..n {
            let i = inv[old];
            for (oj, v) in a.row(old) {
                let j = inv[oj];
                if j <= i {
                    vals[start[i] + j - first[i]] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = vals[start[i] + j - fi];
                let ri = start[i] + lo - fi;
                let rj = start[j] + lo - fj;
                for k in 0..(j - lo) {
                    s -= vals[ri + k] * vals[rj + k];
                }
                if j < i {
                    vals[start[i] + j - fi] = s / vals[start[j + 1] - 1];
                } else {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(LinalgError::NotPositiveDefinite { index: perm[i] });
                    }
                    vals[start[i] + i - fi] = s.sqrt();
                }
            }
        }
        Ok(EnvelopeCholesky { n, perm, first, start, vals })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // forward: L y = P b
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let mut s = y[i];
            for (k, &l) in row[..i - fi].iter().enumerate() {
                s -= l * y[fi + k];
            }
            y[i] = s / row[i - fi];
        }
        // backward: L^T z = y, column sweep over rows of L
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (k, &l) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn solves_tridiagonal() {
        let a = laplacian_1d(50);
        let f = EnvelopeCholesky::new(&a).unwrap();
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let x = f.solve(&b);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-11);
        }
        // RCM keeps a path graph banded
        assert!(f.envelope_size() <= 2 * 50);
    }

    #[test]
    fn rejects_indefinite() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(EnvelopeCholesky::new(&a), Err(LinalgError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn rcm_is_a_permutation_on_disconnected_graphs() {
        let a = SparseMatrix::from_triplets(
            4,
            4,
            &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 1.0), (0, 3, 1.0), (3, 0, 1.0)],
        );
        let mut p = rcm_ordering(&a);
        p.sort();
        assert_eq!(p, vec![0, 1, 2, 3]);
    }
}
