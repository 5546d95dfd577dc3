//! Projections onto constant and piecewise-constant skew tensors and onto
//! rigid motions, all built from exact cell integrals.

use crate::fem::{DofSpace, Family, Mat3, TensorField, TetGeom};
use crate::mesh::{Mesh, Point};
use crate::poly::{jacobian, PolyVec};
use crate::quadrature::TetRule;

type Vec3 = [f64; 3];

pub fn skew_part(m: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (m[i][j] - m[j][i])))
}

fn add_scaled(acc: &mut Mat3, m: &Mat3, s: f64) {
    for i in 0..3 {
        for j in 0..3 {
            acc[i][j] += s * m[i][j];
        }
    }
}

/// `∫_K T` for every tet `K`, for a tensor field with edge-element rows.
pub fn edge_tensor_means(mesh: &Mesh, space: &DofSpace, t: &TensorField) -> Vec<Mat3> {
    assert_eq!(space.family(), Family::Edge0);
    let full: [Vec<f64>; 3] = std::array::from_fn(|r| space.expand(&t.rows[r]));
    (0..mesh.num_tets())
        .map(|k| {
            let g = TetGeom::new(mesh, k);
            let edges = mesh.tet_edges(k);
            let mut out = [[0.0; 3]; 3];
            for (e, &ge) in edges.iter().enumerate() {
                // ∫_K (λ_a ∇λ_b - λ_b ∇λ_a) = |K|/4 (∇λ_b - ∇λ_a)
                let (a, b) = g.edge_pair(e);
                for r in 0..3 {
                    let c = full[r][ge] * g.vol / 4.0;
                    for j in 0..3 {
                        out[r][j] += c * (g.grads[b][j] - g.grads[a][j]);
                    }
                }
            }
            out
        })
        .collect()
}

/// `S_T = skew` of the volume average of `T`.
pub fn project_so3(mesh: &Mesh, space: &DofSpace, t: &TensorField) -> Mat3 {
    let mut total = [[0.0; 3]; 3];
    for m in edge_tensor_means(mesh, space, t) {
        add_scaled(&mut total, &m, 1.0);
    }
    let mut s = skew_part(&total);
    let vol = mesh.total_volume();
    s.iter_mut().flatten().for_each(|x| *x /= vol);
    s
}

/// `S_T` for a tensor field given pointwise, by quadrature of the given order.
pub fn project_so3_fn(mesh: &Mesh, f: impl Fn(Point) -> Mat3, quad_order: usize) -> Mat3 {
    let rule = TetRule::new(quad_order);
    let mut total = [[0.0; 3]; 3];
    for k in 0..mesh.num_tets() {
        let g = TetGeom::new(mesh, k);
        for (l, w) in rule.bary.iter().zip(&rule.weights) {
            add_scaled(&mut total, &f(g.point(l)), w * g.vol);
        }
    }
    let mut s = skew_part(&total);
    let vol = mesh.total_volume();
    s.iter_mut().flatten().for_each(|x| *x /= vol);
    s
}

/// Per slice `j`, the skew part of the mean of `T` over that slice.
pub fn piecewise_skew(mesh: &Mesh, space: &DofSpace, t: &TensorField) -> Vec<Mat3> {
    let ns = mesh.num_slices();
    let mut totals = vec![[[0.0; 3]; 3]; ns];
    let mut vols = vec![0.0; ns];
    for (k, m) in edge_tensor_means(mesh, space, t).iter().enumerate() {
        let j = mesh.slices()[k];
        add_scaled(&mut totals[j], m, 1.0);
        vols[j] += mesh.volume(k);
    }
    totals
        .iter()
        .zip(&vols)
        .map(|(m, v)| {
            let mut s = skew_part(m);
            s.iter_mut().flatten().for_each(|x| *x /= v);
            s
        })
        .collect()
}

/// The rigid motion `r_v(x) = S x + b` sharing the skew gradient mean and
/// the mean of `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidProjection {
    /// Skew part of the mean gradient.
    pub s: Mat3,
    /// Mean of `v`.
    pub a: Vec3,
    /// `a - S x̄` with `x̄` the centroid of the domain.
    pub b: Vec3,
    /// `max_k |⟨∇(v - r_v), E_k⟩|` over an orthonormal basis of so(3).
    pub so3_residual: f64,
    /// `max_k |⟨v - r_v, e_k⟩|`.
    pub translation_residual: f64,
}

impl RigidProjection {
    /// From the integrals `∫ 1`, `∫ x`, `∫ v` and `∫ ∇v`.
    pub fn from_moments(vol: f64, int_x: Vec3, int_v: Vec3, int_grad: Mat3) -> RigidProjection {
        let mut s = skew_part(&int_grad);
        s.iter_mut().flatten().for_each(|x| *x /= vol);
        let a = int_v.map(|x| x / vol);
        let xbar = int_x.map(|x| x / vol);
        let b: Vec3 = std::array::from_fn(|i| a[i] - (0..3).map(|j| s[i][j] * xbar[j]).sum::<f64>());
        // ⟨∇(v - r_v), E⟩ = ⟨∫∇v - vol S, E⟩, nonzero only through the skew part
        let rest = skew_part(&int_grad);
        let so3_residual = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(i, j)| (2.0f64.sqrt() * (rest[i][j] - vol * s[i][j])).abs())
            .fold(0.0, f64::max);
        let translation_residual = (0..3)
            .map(|i| (int_v[i] - (0..3).map(|j| s[i][j] * int_x[j]).sum::<f64>() - vol * b[i]).abs())
            .fold(0.0, f64::max);
        RigidProjection { s, a, b, so3_residual, translation_residual }
    }

    pub fn eval(&self, x: Point) -> Vec3 {
        std::array::from_fn(|i| (0..3).map(|j| self.s[i][j] * x[j]).sum::<f64>() + self.b[i])
    }

    /// True when `r_v = 0` to within `tol`.
    pub fn is_zero(&self, tol: f64) -> bool {
        self.s.iter().flatten().chain(&self.b).all(|x| x.abs() <= tol)
    }
}

/// Rigid projection of a P1 vector field.
pub fn project_rigid_p1(mesh: &Mesh, space: &DofSpace, free: &[f64]) -> RigidProjection {
    assert_eq!(space.family(), Family::P1Vector);
    let full = space.expand(free);
    let nv = mesh.num_vertices();
    let (mut vol, mut int_x, mut int_v, mut int_grad) = (0.0, [0.0; 3], [0.0; 3], [[0.0; 3]; 3]);
    for k in 0..mesh.num_tets() {
        let g = TetGeom::new(mesh, k);
        vol += g.vol;
        for a in 0..4 {
            for c in 0..3 {
                let val = full[c * nv + g.verts[a]];
                int_x[c] += g.vol / 4.0 * g.pts[a][c];
                int_v[c] += g.vol / 4.0 * val;
                for j in 0..3 {
                    int_grad[c][j] += g.vol * val * g.grads[a][j];
                }
            }
        }
    }
    RigidProjection::from_moments(vol, int_x, int_v, int_grad)
}

/// Rigid projection of a polynomial vector field over the mesh.
pub fn project_rigid_poly(mesh: &Mesh, v: &PolyVec, quad_order: usize) -> RigidProjection {
    let jac = jacobian(v);
    let rule = TetRule::new(quad_order);
    let (mut vol, mut int_x, mut int_v, mut int_grad) = (0.0, [0.0; 3], [0.0; 3], [[0.0; 3]; 3]);
    for k in 0..mesh.num_tets() {
        let g = TetGeom::new(mesh, k);
        for (l, w) in rule.bary.iter().zip(&rule.weights) {
            let x = g.point(l);
            let wq = w * g.vol;
            vol += wq;
            for i in 0..3 {
                int_x[i] += wq * x[i];
                int_v[i] += wq * v[i].eval(x);
                for j in 0..3 {
                    int_grad[i][j] += wq * jac[i][j].eval(x);
                }
            }
        }
    }
    RigidProjection::from_moments(vol, int_x, int_v, int_grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_space, interpolate, interpolate_tensor, AnalyticField, Bc};
    use crate::mesh::{generate_primitive, Primitive};
    use crate::poly::Poly;

    const J: Mat3 = [[0.0, -1.0, 0.5], [1.0, 0.0, -2.0], [-0.5, 2.0, 0.0]];

    fn constant_rows(m: Mat3) -> [AnalyticField; 3] {
        std::array::from_fn(|r| AnalyticField::vector(move |_| m[r]))
    }

    #[test]
    fn so3_projection_of_constant_skew_and_symmetric() {
        let mesh = generate_primitive(Primitive::CubeWithTunnel, 1);
        let space = build_space(&mesh, Family::Edge0, Bc::free()).unwrap();
        let t = interpolate_tensor(&mesh, &space, &constant_rows(J), 2).unwrap();
        let s = project_so3(&mesh, &space, &t);
        for i in 0..3 {
            for j in 0..3 {
                assert!((s[i][j] - J[i][j]).abs() < 1e-13);
            }
        }
        for p in piecewise_skew(&mesh, &space, &t) {
            assert!((p[0][1] - J[0][1]).abs() < 1e-13);
        }
        let sym = [[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]];
        let t = interpolate_tensor(&mesh, &space, &constant_rows(sym), 2).unwrap();
        assert!(project_so3(&mesh, &space, &t).iter().flatten().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn so3_projection_of_linear_field() {
        let mesh = generate_primitive(Primitive::UnitCube, 2);
        let s = project_so3_fn(&mesh, |x| J.map(|r| r.map(|e| e * x[0])), 2);
        assert!((s[1][0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rigid_projection_reproduces_rigid_motion() {
        let mesh = generate_primitive(Primitive::UnitCube, 2);
        let space = build_space(&mesh, Family::P1Vector, Bc::free()).unwrap();
        let b = [0.3, -1.0, 2.0];
        let v = interpolate(
            &mesh,
            &space,
            &AnalyticField::vector(move |x| {
                std::array::from_fn(|i| (0..3).map(|j| J[i][j] * x[j]).sum::<f64>() + b[i])
            }),
            2,
        )
        .unwrap();
        let r = project_rigid_p1(&mesh, &space, &v);
        for i in 0..3 {
            assert!((r.b[i] - b[i]).abs() < 1e-13);
            for j in 0..3 {
                assert!((r.s[i][j] - J[i][j]).abs() < 1e-13);
            }
        }
        let w = [Poly::var(0), -Poly::var(1), Poly::zero()];
        let r = project_rigid_poly(&mesh, &w, 2);
        assert!(r.s.iter().flatten().all(|x| x.abs() < 1e-15));
        assert!((r.a[0] - 0.5).abs() < 1e-14 && (r.a[1] + 0.5).abs() < 1e-14);
        assert_eq!(r.a, r.b);
    }
}
