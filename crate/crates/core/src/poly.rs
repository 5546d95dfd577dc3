//! Trivariate polynomials with real coefficients.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// A polynomial `sum c_k x^k1 y^k2 z^k3`, stored sparsely by exponent.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<[u32; 3], f64>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: f64) -> Poly {
        Poly::monomial(c, [0, 0, 0])
    }

    pub fn monomial(c: f64, exp: [u32; 3]) -> Poly {
        let mut p = Poly::zero();
        if c != 0.0 {
            p.terms.insert(exp, c);
        }
        p
    }

    /// The coordinate function `x_axis`.
    pub fn var(axis: usize) -> Poly {
        let mut e = [0; 3];
        e[axis] = 1;
        Poly::monomial(1.0, e)
    }

    /// `prod x_i (1 - x_i)`, which vanishes on the boundary of the unit cube.
    pub fn bubble() -> Poly {
        (0..3).map(|i| Poly::var(i) * (Poly::constant(1.0) - Poly::var(i))).fold(Poly::constant(1.0), |a, b| a * b)
    }

    pub fn terms(&self) -> impl Iterator<Item = ([u32; 3], f64)> + '_ {
        self.terms.iter().map(|(&e, &c)| (e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e[0] + e[1] + e[2]).max().unwrap_or(0)
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32))
            .sum()
    }

    /// Evaluation from tables `pw[axis][k] = x_axis^k` covering the degree.
    pub fn eval_powers(&self, pw: &[Vec<f64>; 3]) -> f64 {
        self.terms.iter().map(|(e, c)| c * pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize]).sum()
    }

    /// The polynomial in the remaining variables with `x_axis = value`.
    pub fn substitute(&self, axis: usize, value: f64) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            let mut f = *e;
            f[axis] = 0;
            out.add_term(f, c * value.powi(e[axis] as i32));
        }
        out
    }

    pub fn deriv(&self, axis: usize) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            if e[axis] > 0 {
                let mut f = *e;
                f[axis] -= 1;
                out.add_term(f, c * e[axis] as f64);
            }
        }
        out
    }

    pub fn grad(&self) -> [Poly; 3] {
        [self.deriv(0), self.deriv(1), self.deriv(2)]
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            out.add_term(*e, c * s);
        }
        out
    }

    fn add_term(&mut self, e: [u32; 3], c: f64) {
        let v = self.terms.entry(e).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&e);
        }
    }

    /// Exact integral over `[0,1]^3` from the monomial moments `1/((i+1)(j+1)(k+1))`.
    pub fn integrate_unit_cube(&self) -> f64 {
        self.terms.iter().map(|(e, c)| c / ((e[0] + 1) as f64 * (e[1] + 1) as f64 * (e[2] + 1) as f64)).sum()
    }

    /// Largest absolute coefficient.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, *c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c);
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                out.add_term([a[0] + b[0], a[1] + b[1], a[2] + b[2]], ca * cb);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: &Poly) -> Poly {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

/// Exponents of all monomials of total degree at most `max_degree`.
pub fn monomials(max_degree: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        for i in (0..=d).rev() {
            for j in (0..=d - i).rev() {
                out.push([i, j, d - i - j]);
            }
        }
    }
    out
}

/// Power tables `x_axis^k` for `k ≤ degree`, as used by [`Poly::eval_powers`].
pub fn power_table(x: [f64; 3], degree: u32) -> [Vec<f64>; 3] {
    std::array::from_fn(|a| {
        let mut v = Vec::with_capacity(degree as usize + 1);
        let mut p = 1.0;
        for _ in 0..=degree {
            v.push(p);
            p *= x[a];
        }
        v
    })
}

/// A vector field with polynomial components.
pub type PolyVec = [Poly; 3];

/// Gradient matrix `(∇v)_ij = ∂_j v_i`.
pub fn jacobian(v: &PolyVec) -> [[Poly; 3]; 3] {
    [v[0].grad(), v[1].grad(), v[2].grad()]
}

pub fn divergence(v: &PolyVec) -> Poly {
    v[0].deriv(0) + v[1].deriv(1) + v[2].deriv(2)
}

pub fn curl(v: &PolyVec) -> PolyVec {
    [v[2].deriv(1) - v[1].deriv(2), v[0].deriv(2) - v[2].deriv(0), v[1].deriv(0) - v[0].deriv(1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_eval() {
        let x = Poly::var(0);
        let y = Poly::var(1);
        let p = &(&x * &x) + &(&y.scale(3.0) - &Poly::constant(1.0));
        assert_eq!(p.eval([2.0, 1.0, 7.0]), 6.0);
        assert_eq!(p.degree(), 2);
        assert_eq!(p.deriv(0), x.scale(2.0));
        assert!((&p - &p).is_zero());
        assert_eq!(p.eval_powers(&power_table([2.0, 1.0, 7.0], 2)), 6.0);
        assert_eq!(p.substitute(0, 2.0), &y.scale(3.0) + &Poly::constant(3.0));
    }

    #[test]
    fn monomial_count() {
        assert_eq!(monomials(0), vec![[0, 0, 0]]);
        assert_eq!(monomials(5).len(), 56);
    }

    #[test]
    fn bubble_restricts_to_zero() {
        let b = Poly::bubble();
        for axis in 0..3 {
            assert!(b.substitute(axis, 0.0).is_zero());
            assert!(b.substitute(axis, 1.0).max_coeff() < 1e-15);
        }
    }

    #[test]
    fn bubble_vanishes_on_faces() {
        let b = Poly::bubble();
        assert_eq!(b.degree(), 6);
        for p in [[0.0, 0.3, 0.7], [1.0, 0.2, 0.2], [0.5, 0.0, 0.1], [0.4, 0.4, 1.0]] {
            assert!(b.eval(p).abs() < 1e-16);
        }
        assert!((b.integrate_unit_cube() - 1.0 / 216.0).abs() < 1e-17);
    }

    #[test]
    fn div_curl_is_zero() {
        let v = [Poly::var(1) * Poly::var(2), Poly::monomial(2.0, [3, 0, 1]), Poly::var(0) * Poly::var(0)];
        assert!(divergence(&curl(&v)).is_zero());
    }
}
