//! Scalars and vectors embedded as skew-symmetric tensor fields, and the
//! pointwise control of their gradient by their row-wise curl.

use super::PolyMat;
use crate::fem::Mat3;
use crate::poly::{curl, Poly, PolyVec};
use nalgebra::DMatrix;

/// Row-wise curl of a polynomial tensor field.
pub fn tensor_curl(t: &PolyMat) -> PolyMat {
    std::array::from_fn(|r| curl(&t[r]))
}

fn norm2(entries: impl IntoIterator<Item = Poly>) -> f64 {
    entries.into_iter().map(|p| (&p * &p).integrate_unit_cube()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewScalarEmbedding {
    /// `T_u` with `(T_u)_13 = u` and `(T_u)_31 = -u` (one-based).
    pub t: PolyMat,
    pub t_norm2: f64,
    pub u_norm2: f64,
    pub curl_norm2: f64,
    /// `‖∂₁u‖² + 2‖∂₂u‖² + ‖∂₃u‖²`.
    pub curl_formula: f64,
    pub grad_norm2: f64,
    /// `|‖T_u‖² - 2‖u‖²|`, relative.
    pub norm_residual: f64,
    /// `|‖Curl T_u‖² - (‖∂₁u‖² + 2‖∂₂u‖² + ‖∂₃u‖²)|`, relative.
    pub curl_residual: f64,
}

impl SkewScalarEmbedding {
    /// `‖Curl T_u‖² ≤ 2‖∇u‖²`.
    pub fn curl_bounded_by_gradient(&self) -> bool {
        self.curl_norm2 <= 2.0 * self.grad_norm2 * (1.0 + 1e-14)
    }
}

fn rel(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff.abs() / scale
    } else {
        diff.abs()
    }
}

/// Embeds `u` and compares the tensor norms with those of `u`, integrating
/// exactly over the unit cube.
pub fn embed_skew_scalar(u: &Poly) -> SkewScalarEmbedding {
    let z = Poly::zero;
    let t: PolyMat = [[z(), z(), u.clone()], [z(), z(), z()], [-u, z(), z()]];
    let t_norm2 = norm2(t.iter().flatten().cloned());
    let u_norm2 = norm2([u.clone()]);
    let curl_norm2 = norm2(tensor_curl(&t).into_iter().flatten());
    let g = u.grad();
    let d: [f64; 3] = std::array::from_fn(|k| norm2([g[k].clone()]));
    let curl_formula = d[0] + 2.0 * d[1] + d[2];
    SkewScalarEmbedding {
        norm_residual: rel(t_norm2 - 2.0 * u_norm2, t_norm2),
        curl_residual: rel(curl_norm2 - curl_formula, curl_norm2.max(curl_formula)),
        t,
        t_norm2,
        u_norm2,
        curl_norm2,
        curl_formula,
        grad_norm2: d.iter().sum(),
    }
}

/// The skew tensor with rows `(0, -v₁, v₂)`, `(v₁, 0, -v₃)`, `(-v₂, v₃, 0)`.
pub fn embed_skew_vector(v: &PolyVec) -> PolyMat {
    let z = Poly::zero;
    [[z(), -&v[0], v[1].clone()], [v[0].clone(), z(), -&v[2]], [-&v[1], v[2].clone(), z()]]
}

/// Entries `∂_k A_ij` flattened as `9i + 3j + k`.
fn gradient_entries(a: &PolyMat, x: [f64; 3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(27);
    for row in a {
        for entry in row {
            for k in 0..3 {
                out.push(entry.deriv(k).eval(x));
            }
        }
    }
    out
}

/// Entries of `Curl A` flattened as `3i + j`.
fn curl_entries(a: &PolyMat, x: [f64; 3]) -> Vec<f64> {
    tensor_curl(a).iter().flatten().map(|p| p.eval(x)).collect()
}

/// The linear map from `Curl A_v` to `∇A_v`, found by applying both to the
/// nine monomial fields `x_j e_i`, and the smallest `c` with
/// `|∇A_v| ≤ c |Curl A_v|` pointwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewRelation {
    /// 27 × 9.
    pub matrix: DMatrix<f64>,
    pub constant: f64,
}

/// Reconstruction of `∇A_v` from `Curl A_v` at sample points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewVectorCheck {
    /// `max |∇A_v - R Curl A_v|` over the points, relative to `max |∇A_v|`.
    pub residual: f64,
    /// `max |∇A_v| / |Curl A_v|` over the points where the curl is nonzero.
    pub max_ratio: f64,
}

impl SkewRelation {
    pub fn compute() -> SkewRelation {
        let mut k = DMatrix::zeros(27, 9);
        let mut l = DMatrix::zeros(9, 9);
        for i in 0..3 {
            for j in 0..3 {
                let mut v: PolyVec = std::array::from_fn(|_| Poly::zero());
                v[i] = Poly::var(j);
                let a = embed_skew_vector(&v);
                let col = 3 * i + j;
                k.column_mut(col).copy_from_slice(&gradient_entries(&a, [0.0; 3]));
                l.column_mut(col).copy_from_slice(&curl_entries(&a, [0.0; 3]));
            }
        }
        let l_inv = l.try_inverse().expect("curl of a skew field determines its gradient");
        let matrix = k * l_inv;
        let constant = matrix.singular_values().max();
        SkewRelation { matrix, constant }
    }

    /// `∇A` from `Curl A`, flattened as `9i + 3j + k`.
    pub fn apply(&self, curl: &Mat3) -> Vec<f64> {
        let c = nalgebra::DVector::from_iterator(9, curl.iter().flatten().copied());
        (&self.matrix * c).iter().copied().collect()
    }

    pub fn check(&self, v: &PolyVec, points: &[[f64; 3]]) -> SkewVectorCheck {
        let a = embed_skew_vector(v);
        let (mut err, mut scale, mut max_ratio) = (0.0f64, 0.0f64, 0.0f64);
        for &x in points {
            let g = gradient_entries(&a, x);
            let c = curl_entries(&a, x);
            let cm: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| c[3 * i + j]));
            let r = self.apply(&cm);
            err = g.iter().zip(&r).fold(err, |m, (p, q)| m.max((p - q).abs()));
            scale = g.iter().fold(scale, |m, p| m.max(p.abs()));
            let ng = g.iter().map(|p| p * p).sum::<f64>().sqrt();
            let nc = c.iter().map(|p| p * p).sum::<f64>().sqrt();
            if nc > 0.0 {
                max_ratio = max_ratio.max(ng / nc);
            }
        }
        SkewVectorCheck { residual: rel(err, scale), max_ratio }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::monomials;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn points() -> Vec<[f64; 3]> {
        crate::quadrature::CubeRule::new(5).points
    }

    #[test]
    fn scalar_embedding_equality_case() {
        let e = embed_skew_scalar(&Poly::var(1));
        assert_eq!(e.curl_norm2, 2.0);
        assert_eq!(e.curl_norm2, 2.0 * e.grad_norm2);
        let e = embed_skew_scalar(&Poly::var(0));
        assert_eq!(e.curl_norm2, 1.0);
        assert!(e.curl_bounded_by_gradient());
    }

    #[test]
    fn scalar_embedding_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let u =
                monomials(4).into_iter().fold(Poly::zero(), |p, e| p + Poly::monomial(rng.random_range(-1.0..1.0), e));
            let e = embed_skew_scalar(&u);
            assert!(e.norm_residual <= 1e-13 && e.curl_residual <= 1e-13);
            assert!(e.curl_bounded_by_gradient());
        }
    }

    #[test]
    fn relation_constant_is_sqrt2() {
        // |∇A|² = 2|∇a|² and |Curl A|² = |∇a|² + (div a)² for the axial vector a
        let r = SkewRelation::compute();
        assert!((r.constant - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn constant_field_has_no_curl() {
        let r = SkewRelation::compute();
        let v = [Poly::constant(1.0), Poly::constant(-2.0), Poly::constant(0.5)];
        let a = embed_skew_vector(&v);
        assert!(curl_entries(&a, [0.3, 0.2, 0.9]).iter().all(|&c| c == 0.0));
        assert_eq!(r.check(&v, &points()).residual, 0.0);
    }

    #[test]
    fn random_fields_are_reconstructed() {
        let r = SkewRelation::compute();
        let single = r.check(&[Poly::var(1), Poly::zero(), Poly::zero()], &points());
        assert!(single.residual <= 1e-15 && single.max_ratio > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let v: PolyVec = std::array::from_fn(|_| {
                monomials(3).into_iter().fold(Poly::zero(), |p, e| p + Poly::monomial(rng.random_range(-1.0..1.0), e))
            });
            let c = r.check(&v, &points());
            assert!(c.residual <= 1e-12);
            assert!(c.max_ratio <= r.constant * (1.0 + 1e-12));
        }
    }
}
