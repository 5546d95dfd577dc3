//! L² projections onto so(3), ℝ³ and the rigid motions over the unit cube.
//!
//! Projections are formed from exact monomial moments; the inner products
//! they are checked against are sampled with a Gauss rule, so the two sides
//! of each check are computed independently.

use super::{PolyMat, Vec3};
use crate::constants::so3_basis;
use crate::fem::Mat3;
use crate::poly::{jacobian, Poly, PolyVec};
use crate::quadrature::CubeRule;

const CENTROID: Vec3 = [0.5; 3];

/// `r(x) = S x + b` with `S` skew.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    pub s: Mat3,
    /// Mean of the projected field.
    pub a: Vec3,
    /// `a - S x̄`, `x̄` the centroid.
    pub b: Vec3,
}

impl RigidMotion {
    pub fn eval(&self, x: Vec3) -> Vec3 {
        std::array::from_fn(|i| (0..3).map(|j| self.s[i][j] * x[j]).sum::<f64>() + self.b[i])
    }

    pub fn as_poly(&self) -> PolyVec {
        std::array::from_fn(|i| (0..3).fold(Poly::constant(self.b[i]), |p, j| p + Poly::var(j).scale(self.s[i][j])))
    }

    pub fn max_abs(&self) -> f64 {
        self.s.iter().flatten().chain(&self.b).fold(0.0, |m, x| m.max(x.abs()))
    }
}

fn skew(m: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (m[i][j] - m[j][i])))
}

/// `π_so(3) T = skew` of the mean of `T`.
pub fn so3_projection(t: &PolyMat) -> Mat3 {
    skew(&std::array::from_fn(|i| std::array::from_fn(|j| t[i][j].integrate_unit_cube())))
}

/// `π_ℝ³ v`, the mean of `v`.
pub fn translation_projection(v: &PolyVec) -> Vec3 {
    std::array::from_fn(|i| v[i].integrate_unit_cube())
}

/// `π_RM v = S_∇v x + a_v - S_∇v x̄`.
pub fn rigid_projection(v: &PolyVec) -> RigidMotion {
    let s = so3_projection(&jacobian(v));
    let a = translation_projection(v);
    let b = std::array::from_fn(|i| a[i] - (0..3).map(|j| s[i][j] * CENTROID[j]).sum::<f64>());
    RigidMotion { s, a, b }
}

/// Gauss-sampled `⟨v, e_l⟩` and `⟨∇v, S_l⟩` for the standard basis of ℝ³ and
/// an orthonormal basis of so(3), with `‖v‖` and `‖∇v‖`.
struct Moments {
    translation: Vec3,
    so3: Vec3,
    norm: f64,
}

fn sampled_moments(v: &PolyVec) -> Moments {
    let deg = v.iter().map(Poly::degree).max().unwrap_or(0) as usize;
    let rule = CubeRule::new(2 * deg.max(1));
    let jac = jacobian(v);
    let basis = so3_basis();
    let mut m = Moments { translation: [0.0; 3], so3: [0.0; 3], norm: 0.0 };
    let (mut l2, mut h1) = (0.0, 0.0);
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        let val: Vec3 = std::array::from_fn(|i| v[i].eval(*x));
        let g: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| jac[i][j].eval(*x)));
        for l in 0..3 {
            m.translation[l] += w * val[l];
            m.so3[l] += w
                * (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| g[i][j] * basis[l][i][j]).sum::<f64>();
        }
        l2 += w * val.iter().map(|x| x * x).sum::<f64>();
        h1 += w * g.iter().flatten().map(|x| x * x).sum::<f64>();
    }
    m.norm = l2.sqrt().max(h1.sqrt());
    m
}

/// Residuals of the projection identities for one field; all relative to
/// `max(‖v‖, ‖∇v‖)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionResiduals {
    /// `max_l |⟨S_∇v, S_l⟩ - ⟨∇v, S_l⟩|`.
    pub so3_orthogonality: f64,
    /// `max_l |⟨r_v, e_l⟩ - ⟨v, e_l⟩|`.
    pub translation_orthogonality: f64,
    /// `|π_so(3) S_∇v - S_∇v|`, with `S_∇v` as a constant field.
    pub so3_idempotence: f64,
    /// `|π_ℝ³ a_v - a_v|`.
    pub translation_idempotence: f64,
    /// `|π_RM r_v - r_v|`.
    pub rigid_reproduction: f64,
    /// For `u = v - r_v`: `max_l max(|⟨∇u, S_l⟩|, |⟨u, e_l⟩|)`.
    pub remainder_orthogonality: f64,
    /// `|π_RM u|`.
    pub remainder_projection: f64,
}

impl ProjectionResiduals {
    pub fn max(&self) -> f64 {
        [
            self.so3_orthogonality,
            self.translation_orthogonality,
            self.so3_idempotence,
            self.translation_idempotence,
            self.rigid_reproduction,
            self.remainder_orthogonality,
            self.remainder_projection,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn constant_mat(m: &Mat3) -> PolyMat {
    std::array::from_fn(|i| std::array::from_fn(|j| Poly::constant(m[i][j])))
}

pub fn verify_projection_orthogonality(v: &PolyVec) -> ProjectionResiduals {
    let r = rigid_projection(v);
    let mv = sampled_moments(v);
    let mr = sampled_moments(&r.as_poly());
    let scale = if mv.norm > 0.0 { mv.norm } else { 1.0 };
    let basis = so3_basis();
    let s_dot: Vec<f64> =
        basis.iter().map(|b| (0..3).flat_map(|i| (0..3).map(move |j| r.s[i][j] * b[i][j])).sum()).collect();
    let u: PolyVec = std::array::from_fn(|i| &v[i] - &r.as_poly()[i]);
    let mu = sampled_moments(&u);
    let rr = rigid_projection(&r.as_poly());
    let flat = |m: &RigidMotion| -> Vec<f64> { m.s.iter().flatten().chain(&m.b).copied().collect() };
    ProjectionResiduals {
        so3_orthogonality: max_diff(&s_dot, &mv.so3) / scale,
        translation_orthogonality: max_diff(&mr.translation, &mv.translation) / scale,
        so3_idempotence: max_diff(
            so3_projection(&constant_mat(&r.s)).iter().flatten().copied().collect::<Vec<_>>().as_slice(),
            r.s.iter().flatten().copied().collect::<Vec<_>>().as_slice(),
        ) / scale,
        translation_idempotence: max_diff(&translation_projection(&r.a.map(Poly::constant)), &r.a) / scale,
        rigid_reproduction: max_diff(&flat(&rr), &flat(&r)) / scale,
        remainder_orthogonality: mu.so3.iter().chain(&mu.translation).fold(0.0, |m: f64, x| m.max(x.abs())) / scale,
        remainder_projection: rigid_projection(&u).max_abs() / scale,
    }
}

/// `max_l |⟨S_T, S_l⟩ - ⟨T, S_l⟩|`, relative to `‖T‖`.
pub fn verify_tensor_so3_orthogonality(t: &PolyMat) -> f64 {
    let s = so3_projection(t);
    let deg = t.iter().flatten().map(Poly::degree).max().unwrap_or(0) as usize;
    let rule = CubeRule::new(2 * deg.max(1));
    let basis = so3_basis();
    let mut sampled = [0.0; 3];
    let mut norm2 = 0.0;
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        let m: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| t[i][j].eval(*x)));
        for l in 0..3 {
            sampled[l] += w
                * (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| m[i][j] * basis[l][i][j]).sum::<f64>();
        }
        norm2 += w * m.iter().flatten().map(|x| x * x).sum::<f64>();
    }
    let exact: Vec<f64> =
        basis.iter().map(|b| (0..3).flat_map(|i| (0..3).map(move |j| s[i][j] * b[i][j])).sum()).collect();
    let scale = if norm2 > 0.0 { norm2.sqrt() } else { 1.0 };
    max_diff(&exact, &sampled) / scale
}

/// Both sides of `π_RM v = 0 ⇔ ∇v ⊥ so(3) ∧ v ⊥ ℝ³`, decided with `tol`
/// relative to `max(‖v‖, ‖∇v‖)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RmEquivalence {
    pub projection_zero: bool,
    pub orthogonal: bool,
}

impl RmEquivalence {
    pub fn new(v: &PolyVec, tol: f64) -> RmEquivalence {
        let m = sampled_moments(v);
        let scale = if m.norm > 0.0 { m.norm } else { 1.0 };
        RmEquivalence {
            projection_zero: rigid_projection(v).max_abs() <= tol * scale,
            orthogonal: m.so3.iter().chain(&m.translation).all(|x| x.abs() <= tol * scale),
        }
    }

    pub fn agrees(&self) -> bool {
        self.projection_zero == self.orthogonal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::monomials;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cubic(rng: &mut impl Rng) -> PolyVec {
        std::array::from_fn(|_| {
            monomials(3).into_iter().fold(Poly::zero(), |p, e| p + Poly::monomial(rng.random_range(-1.0..1.0), e))
        })
    }

    #[test]
    fn constant_skew_tensor_projects_to_itself() {
        let s: Mat3 = [[0.0, 1.0, -2.0], [-1.0, 0.0, 0.5], [2.0, -0.5, 0.0]];
        assert_eq!(so3_projection(&constant_mat(&s)), s);
        assert!(verify_tensor_so3_orthogonality(&constant_mat(&s)) <= 1e-15);
    }

    #[test]
    fn rigid_motion_is_reproduced() {
        let r =
            RigidMotion { s: [[0.0, 1.0, -2.0], [-1.0, 0.0, 0.5], [2.0, -0.5, 0.0]], a: [0.0; 3], b: [0.3, -1.0, 2.0] };
        let p = rigid_projection(&r.as_poly());
        assert!(
            max_diff(
                &p.s.iter().flatten().copied().collect::<Vec<_>>(),
                &r.s.iter().flatten().copied().collect::<Vec<_>>()
            ) <= 1e-15
        );
        assert!(max_diff(&p.b, &r.b) <= 1e-15);
        assert_eq!(p.eval([0.5; 3]), p.a);
        let res = verify_projection_orthogonality(&r.as_poly());
        assert!(res.so3_orthogonality <= 1e-15 && res.translation_orthogonality <= 1e-15);
        assert!(res.remainder_projection <= 1e-15);
    }

    #[test]
    fn random_cubics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let v = random_cubic(&mut rng);
            assert!(verify_projection_orthogonality(&v).max() <= 1e-12);
            let t: PolyMat = [random_cubic(&mut rng), random_cubic(&mut rng), random_cubic(&mut rng)];
            assert!(verify_tensor_so3_orthogonality(&t) <= 1e-12);
        }
    }

    #[test]
    fn rigid_equivalence_both_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let v = random_cubic(&mut rng);
            let generic = RmEquivalence::new(&v, 1e-12);
            assert_eq!(generic, RmEquivalence { projection_zero: false, orthogonal: false });
            let r = rigid_projection(&v).as_poly();
            let u: PolyVec = std::array::from_fn(|i| &v[i] - &r[i]);
            assert_eq!(RmEquivalence::new(&u, 1e-12), RmEquivalence { projection_zero: true, orthogonal: true });
        }
    }

    #[test]
    fn agrees_with_mesh_projection() {
        let mesh = crate::mesh::generate_primitive(crate::mesh::Primitive::UnitCube, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_cubic(&mut rng);
        let a = rigid_projection(&v);
        let b = crate::hodge::project_rigid_poly(&mesh, &v, 6);
        assert!(max_diff(&a.b, &b.b) <= 1e-13);
        assert!(
            max_diff(
                &a.s.iter().flatten().copied().collect::<Vec<_>>(),
                &b.s.iter().flatten().copied().collect::<Vec<_>>()
            ) <= 1e-13
        );
    }
}
