//! Gauss-Legendre based quadrature on intervals, triangles, tets and the unit cube.

use std::f64::consts::PI;

/// Gauss-Legendre rule with `m` points on `[0, 1]`, nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Newton on P_m from the Chebyshev-like initial guess
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map from [-1,1] to [0,1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[m - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Points needed for exactness of degree `p` on one direction of a
/// collapsed rule whose Jacobian adds degree `extra`.
fn points_for(p: usize, extra: usize) -> usize {
    (p + extra + 1).div_ceil(2).max(1)
}

/// Quadrature on the reference tet in barycentric coordinates; weights sum to 1.
#[derive(Debug, Clone)]
pub struct TetRule {
    pub bary: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TetRule {
    /// Collapsed (Duffy) Gauss-Legendre rule exact for total degree `degree`.
    pub fn new(degree: usize) -> TetRule {
        let m = points_for(degree, 2);
        let (x, w) = gauss_legendre(m);
        let mut bary = Vec::with_capacity(m * m * m);
        let mut weights = Vec::with_capacity(m * m * m);
        for (u, wu) in x.iter().zip(&w) {
            for (v, wv) in x.iter().zip(&w) {
                for (s, ws) in x.iter().zip(&w) {
                    let l1 = *u;
                    let l2 = v * (1.0 - u);
                    let l3 = s * (1.0 - u) * (1.0 - v);
                    bary.push([1.0 - l1 - l2 - l3, l1, l2, l3]);
                    // reference volume 1/6 is folded in so the weights sum to 1
                    weights.push(6.0 * wu * wv * ws * (1.0 - u) * (1.0 - u) * (1.0 - v));
                }
            }
        }
        TetRule { bary, weights, degree }
    }
}

/// Quadrature on the reference triangle in barycentric coordinates; weights sum to 1.
#[derive(Debug, Clone)]
pub struct TriRule {
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriRule {
    pub fn new(degree: usize) -> TriRule {
        let m = points_for(degree, 1);
        let (x, w) = gauss_legendre(m);
        let mut bary = Vec::new();
        let mut weights = Vec::new();
        for (u, wu) in x.iter().zip(&w) {
            for (v, wv) in x.iter().zip(&w) {
                let l1 = *u;
                let l2 = v * (1.0 - u);
                bary.push([1.0 - l1 - l2, l1, l2]);
                weights.push(2.0 * wu * wv * (1.0 - u));
            }
        }
        TriRule { bary, weights }
    }
}

/// Tensor Gauss-Legendre rule on `[0,1]^3` exact for degree `degree` in each variable.
#[derive(Debug, Clone)]
pub struct CubeRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl CubeRule {
    pub fn new(degree: usize) -> CubeRule {
        let m = points_for(degree, 0);
        let (x, w) = gauss_legendre(m);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (a, wa) in x.iter().zip(&w) {
            for (b, wb) in x.iter().zip(&w) {
                for (c, wc) in x.iter().zip(&w) {
                    points.push([*a, *b, *c]);
                    weights.push(wa * wb * wc);
                }
            }
        }
        CubeRule { points, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for m in 1..8 {
            let (x, w) = gauss_legendre(m);
            for p in 0..(2 * m) as i32 {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
                assert!((q - 1.0 / (p + 1) as f64).abs() < 1e-14, "m={m} p={p}");
            }
        }
    }

    #[test]
    fn tet_rule_is_exact_by_degree() {
        // ∫_T λ1^a λ2^b λ3^c / |T| = 6 a! b! c! / (a+b+c+3)!
        for degree in 0..=8usize {
            let rule = TetRule::new(degree);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let c = degree as u32 - a - b;
                    let q: f64 = rule
                        .bary
                        .iter()
                        .zip(&rule.weights)
                        .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32) * l[3].powi(c as i32))
                        .sum();
                    let exact = 6.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
                    assert!((q - exact).abs() < 1e-14, "degree {degree}: {a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn tri_rule_is_exact_by_degree() {
        for degree in 0..=6usize {
            let rule = TriRule::new(degree);
            for a in 0..=degree as u32 {
                let b = degree as u32 - a;
                let q: f64 = rule
                    .bary
                    .iter()
                    .zip(&rule.weights)
                    .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                let exact = 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2);
                assert!((q - exact).abs() < 1e-14);
            }
        }
    }
}
