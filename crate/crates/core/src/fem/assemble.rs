//! Assembly of bilinear forms and incidence maps over constrained spaces.

use super::coefficient::{Mat3, MatrixCoefficient};
use super::element::{TetGeom, Vec3};
use super::{DofSpace, Family, FemError};
use crate::linalg::SparseMatrix;
use crate::mesh::{dot3, Mesh};
use crate::quadrature::TetRule;
use rayon::prelude::*;

/// Quadrature degree used unless a caller asks for more.
pub const DEFAULT_QUAD_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Form {
    /// `⟨u, v⟩` on any family.
    Mass,
    /// `⟨∇u, ∇v⟩` on P1 scalar or vector fields.
    Grad,
    /// `⟨sym ∇u, sym ∇v⟩` on P1 vector fields.
    SymGrad,
    /// `⟨div u, div v⟩` on P1 vector or face fields.
    DivDiv,
    /// `⟨curl u, curl v⟩` on edge fields.
    CurlCurl,
    /// `⟨sym(∇u F), sym(∇v F)⟩` on P1 vector fields.
    SymF,
    /// Gradient incidence P1 scalar → edge.
    MixedGrad,
    /// Curl incidence edge → face.
    CurlMap,
    /// Divergence incidence face → P0 (face fluxes to cell integrals of the divergence).
    DivMap,
    /// `⟨T, S⟩` on tensors with edge-element rows.
    TensorMass,
    /// `⟨sym T, sym S⟩` on tensors with edge-element rows.
    TensorSym,
    /// `⟨sym(T F), sym(S F)⟩` on tensors with edge-element rows.
    TensorSymF,
    /// `⟨Curl T, Curl S⟩` (row-wise curl) on tensors with edge-element rows.
    TensorCurlCurl,
}

impl Form {
    fn is_tensor(self) -> bool {
        matches!(self, Form::TensorMass | Form::TensorSym | Form::TensorSymF | Form::TensorCurlCurl)
    }

    fn needs_coefficient(self) -> bool {
        matches!(self, Form::SymF | Form::TensorSymF)
    }

    /// Polynomial degree of the integrand without coefficient.
    fn base_degree(self, family: Family) -> usize {
        match (self, family) {
            (Form::Mass, Family::P0Scalar) => 0,
            (Form::Mass, _) | (Form::TensorMass, _) | (Form::TensorSym, _) | (Form::TensorSymF, _) => 2,
            _ => 0,
        }
    }

    fn admits(self, family: Family) -> bool {
        use Family::*;
        match self {
            Form::Mass => true,
            Form::Grad => matches!(family, P1Scalar | P1Vector),
            Form::SymGrad | Form::SymF => family == P1Vector,
            Form::DivDiv => matches!(family, P1Vector | Face0),
            Form::CurlCurl => family == Edge0,
            Form::TensorMass | Form::TensorSym | Form::TensorSymF | Form::TensorCurlCurl => family == Edge0,
            Form::MixedGrad | Form::CurlMap | Form::DivMap => false,
        }
    }
}

/// Assembles `form` over the free dofs of `trial` (columns) and `test` (rows).
///
/// Symmetric forms need `trial == test` and come out symmetric to the bit.
/// Tensor forms act on three stacked copies of the edge space, ordered
/// `row * n_free + dof`. `quad_order` must reach the integrand degree when
/// the coefficient is polynomial; a non-polynomial coefficient only logs a warning.
pub fn assemble(
    mesh: &Mesh,
    form: Form,
    trial: &DofSpace,
    test: &DofSpace,
    coeff: Option<&MatrixCoefficient>,
    quad_order: usize,
) -> Result<SparseMatrix, FemError> {
    match form {
        Form::MixedGrad => return incidence_grad(mesh, trial, test),
        Form::CurlMap => return incidence_curl(mesh, trial, test),
        Form::DivMap => return incidence_div(mesh, trial, test),
        _ => {}
    }
    if trial != test {
        return Err(FemError::SpaceMismatch(format!("{form:?} needs equal trial and test spaces")));
    }
    let space = trial;
    let family = space.family();
    if !form.admits(family) {
        return Err(FemError::SpaceMismatch(format!("{form:?} is not defined on {family:?}")));
    }
    let coeff = match (form.needs_coefficient(), coeff) {
        (true, None) => return Err(FemError::SpaceMismatch(format!("{form:?} needs a matrix coefficient"))),
        (true, Some(c)) => Some(c),
        (false, _) => None,
    };
    let mut needed = form.base_degree(family);
    if let Some(c) = coeff {
        match c.degree() {
            Some(d) => needed += 2 * d,
            None => {
                log::warn!("non-polynomial coefficient integrated approximately with quadrature order {quad_order}")
            }
        }
    }
    if quad_order < needed {
        return Err(FemError::InsufficientQuadrature { needed, given: quad_order });
    }
    let rule = TetRule::new(quad_order);
    let nv = mesh.num_vertices();
    let n_full = space.num_full();
    let n_free = space.num_free();
    let map = |full: usize| -> Option<usize> {
        if form.is_tensor() {
            let (r, d) = (full / n_full, full % n_full);
            space.free_index(d).map(|f| r * n_free + f)
        } else {
            space.free_index(full)
        }
    };
    let locals: Vec<(Vec<usize>, Vec<f64>)> = (0..mesh.num_tets())
        .into_par_iter()
        .map(|t| {
            let geom = TetGeom::new(mesh, t);
            let dofs: Vec<usize> = match (family, form.is_tensor()) {
                (_, true) => (0..3).flat_map(|r| mesh.tet_edges(t).map(|e| r * n_full + e)).collect(),
                (Family::P1Scalar, _) => geom.verts.to_vec(),
                (Family::P1Vector, _) => (0..3).flat_map(|k| geom.verts.map(|v| k * nv + v)).collect(),
                (Family::Edge0, _) => mesh.tet_edges(t).to_vec(),
                (Family::Face0, _) => mesh.tet_faces(t).to_vec(),
                (Family::P0Scalar, _) => vec![t],
            };
            let vals = local_matrix(form, family, &geom, &rule, coeff);
            (dofs, vals)
        })
        .collect();
    let mut triplets = Vec::new();
    for (dofs, vals) in &locals {
        let n = dofs.len();
        let free: Vec<Option<usize>> = dofs.iter().map(|&d| map(d)).collect();
        for i in 0..n {
            let Some(fi) = free[i] else { continue };
            for j in 0..n {
                if let Some(fj) = free[j] {
                    let v = vals[i * n + j];
                    if v != 0.0 {
                        triplets.push((fi, fj, v));
                    }
                }
            }
        }
    }
    let dim = if form.is_tensor() { 3 * n_free } else { n_free };
    Ok(SparseMatrix::from_triplets(dim, dim, &triplets).symmetrized())
}

/// `½(δ_rs p·q + p_s q_r)`: the sym-sym product of `e_r ⊗ p` and `e_s ⊗ q`.
fn sym_rows(r: usize, p: &Vec3, s: usize, q: &Vec3) -> f64 {
    let diag = if r == s { dot3(*p, *q) } else { 0.0 };
    0.5 * (diag + p[s] * q[r])
}

/// `F^T p`.
fn ft_times(f: &Mat3, p: &Vec3) -> Vec3 {
    [0, 1, 2].map(|k| f[0][k] * p[0] + f[1][k] * p[1] + f[2][k] * p[2])
}

fn local_matrix(
    form: Form,
    family: Family,
    g: &TetGeom,
    rule: &TetRule,
    coeff: Option<&MatrixCoefficient>,
) -> Vec<f64> {
    let n = match (family, form.is_tensor()) {
        (_, true) => 18,
        (Family::P1Scalar, _) => 4,
        (Family::P1Vector, _) => 12,
        (Family::Edge0, _) => 6,
        (Family::Face0, _) => 4,
        (Family::P0Scalar, _) => 1,
    };
    let mut a = vec![0.0; n * n];
    let curls: [Vec3; 6] = std::array::from_fn(|e| g.edge_curl(e));
    for (bary, &w) in rule.bary.iter().zip(&rule.weights) {
        let wq = w * g.vol;
        let f = coeff.map(|c| c.eval(g.point(bary)));
        match (form, family) {
            (Form::Mass, Family::P1Scalar) => {
                for i in 0..4 {
                    for j in 0..4 {
                        a[i * 4 + j] += wq * bary[i] * bary[j];
                    }
                }
            }
            (Form::Mass, Family::P1Vector) => {
                for k in 0..3 {
                    for i in 0..4 {
                        for j in 0..4 {
                            a[(k * 4 + i) * 12 + k * 4 + j] += wq * bary[i] * bary[j];
                        }
                    }
                }
            }
            (Form::Mass, Family::Edge0) => {
                let ws: [Vec3; 6] = std::array::from_fn(|e| g.edge_basis(e, bary));
                for i in 0..6 {
                    for j in 0..6 {
                        a[i * 6 + j] += wq * dot3(ws[i], ws[j]);
                    }
                }
            }
            (Form::Mass, Family::Face0) => {
                let ws: [Vec3; 4] = std::array::from_fn(|k| g.face_basis(k, bary));
                for i in 0..4 {
                    for j in 0..4 {
                        a[i * 4 + j] += wq * dot3(ws[i], ws[j]);
                    }
                }
            }
            (Form::Mass, Family::P0Scalar) => a[0] += wq,
            (Form::Grad, Family::P1Scalar) => {
                for i in 0..4 {
                    for j in 0..4 {
                        a[i * 4 + j] += wq * dot3(g.grads[i], g.grads[j]);
                    }
                }
            }
            (Form::Grad, Family::P1Vector) => {
                for k in 0..3 {
                    for i in 0..4 {
                        for j in 0..4 {
                            a[(k * 4 + i) * 12 + k * 4 + j] += wq * dot3(g.grads[i], g.grads[j]);
                        }
                    }
                }
            }
            (Form::SymGrad | Form::SymF, Family::P1Vector) => {
                let p: [Vec3; 4] = std::array::from_fn(|i| match &f {
                    Some(f) => ft_times(f, &g.grads[i]),
                    None => g.grads[i],
                });
                for k in 0..3 {
                    for i in 0..4 {
                        for l in 0..3 {
                            for j in 0..4 {
                                a[(k * 4 + i) * 12 + l * 4 + j] += wq * sym_rows(k, &p[i], l, &p[j]);
                            }
                        }
                    }
                }
            }
            (Form::DivDiv, Family::P1Vector) => {
                for k in 0..3 {
                    for i in 0..4 {
                        for l in 0..3 {
                            for j in 0..4 {
                                a[(k * 4 + i) * 12 + l * 4 + j] += wq * g.grads[i][k] * g.grads[j][l];
                            }
                        }
                    }
                }
            }
            (Form::DivDiv, Family::Face0) => {
                let d: [f64; 4] = std::array::from_fn(|k| g.face_div(k));
                for i in 0..4 {
                    for j in 0..4 {
                        a[i * 4 + j] += wq * d[i] * d[j];
                    }
                }
            }
            (Form::CurlCurl, Family::Edge0) => {
                for i in 0..6 {
                    for j in 0..6 {
                        a[i * 6 + j] += wq * dot3(curls[i], curls[j]);
                    }
                }
            }
            (Form::TensorMass | Form::TensorSym | Form::TensorSymF, Family::Edge0) => {
                let ws: [Vec3; 6] = std::array::from_fn(|e| {
                    let w = g.edge_basis(e, bary);
                    match &f {
                        Some(f) => ft_times(f, &w),
                        None => w,
                    }
                });
                for r in 0..3 {
                    for i in 0..6 {
                        for s in 0..3 {
                            for j in 0..6 {
                                let v = if form == Form::TensorMass {
                                    if r == s {
                                        dot3(ws[i], ws[j])
                                    } else {
                                        0.0
                                    }
                                } else {
                                    sym_rows(r, &ws[i], s, &ws[j])
                                };
                                a[(r * 6 + i) * 18 + s * 6 + j] += wq * v;
                            }
                        }
                    }
                }
            }
            (Form::TensorCurlCurl, Family::Edge0) => {
                for r in 0..3 {
                    for i in 0..6 {
                        for j in 0..6 {
                            a[(r * 6 + i) * 18 + r * 6 + j] += wq * dot3(curls[i], curls[j]);
                        }
                    }
                }
            }
            _ => unreachable!("form/family checked by the caller"),
        }
    }
    a
}

fn expect_family(space: &DofSpace, family: Family, role: &str) -> Result<(), FemError> {
    if space.family() != family {
        return Err(FemError::SpaceMismatch(format!("{role} space must be {family:?}, got {:?}", space.family())));
    }
    Ok(())
}

fn incidence_grad(mesh: &Mesh, trial: &DofSpace, test: &DofSpace) -> Result<SparseMatrix, FemError> {
    expect_family(trial, Family::P1Scalar, "trial")?;
    expect_family(test, Family::Edge0, "test")?;
    let mut t = Vec::new();
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let Some(row) = test.free_index(e) else { continue };
        if let Some(c) = trial.free_index(a) {
            t.push((row, c, -1.0));
        }
        if let Some(c) = trial.free_index(b) {
            t.push((row, c, 1.0));
        }
    }
    Ok(SparseMatrix::from_triplets(test.num_free(), trial.num_free(), &t))
}

fn incidence_curl(mesh: &Mesh, trial: &DofSpace, test: &DofSpace) -> Result<SparseMatrix, FemError> {
    expect_family(trial, Family::Edge0, "trial")?;
    expect_family(test, Family::Face0, "test")?;
    let mut t = Vec::new();
    for (f, &[a, b, c]) in mesh.faces().iter().enumerate() {
        let Some(row) = test.free_index(f) else { continue };
        for (p, q, s) in [(a, b, 1.0), (b, c, 1.0), (a, c, -1.0)] {
            let e = mesh.edge_index(p, q).expect("face edges exist");
            if let Some(col) = trial.free_index(e) {
                t.push((row, col, s));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(test.num_free(), trial.num_free(), &t))
}

fn incidence_div(mesh: &Mesh, trial: &DofSpace, test: &DofSpace) -> Result<SparseMatrix, FemError> {
    expect_family(trial, Family::Face0, "trial")?;
    expect_family(test, Family::P0Scalar, "test")?;
    let mut t = Vec::new();
    for k in 0..mesh.num_tets() {
        let Some(row) = test.free_index(k) else { continue };
        let g = TetGeom::new(mesh, k);
        for (local, f) in mesh.tet_faces(k).into_iter().enumerate() {
            if let Some(col) = trial.free_index(f) {
                t.push((row, col, g.face_sign(local)));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(test.num_free(), trial.num_free(), &t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_space, Bc};
    use crate::mesh::{generate_primitive, Primitive, TAG_T};

    #[test]
    fn p0_mass_trace_is_volume() {
        let m = generate_primitive(Primitive::UnitCube, 2);
        let s = build_space(&m, Family::P0Scalar, Bc::free()).unwrap();
        let a = assemble(&m, Form::Mass, &s, &s, None, DEFAULT_QUAD_ORDER).unwrap();
        assert!((a.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_is_exact() {
        for kind in [Primitive::UnitCube, Primitive::CubeWithTunnel] {
            let m = generate_primitive(kind, 2);
            for bc in [Bc::free(), Bc::on(TAG_T)] {
                let p1 = build_space(&m, Family::P1Scalar, bc).unwrap();
                let ed = build_space(&m, Family::Edge0, bc).unwrap();
                let fa = build_space(&m, Family::Face0, bc).unwrap();
                let p0 = build_space(&m, Family::P0Scalar, Bc::free()).unwrap();
                let g = assemble(&m, Form::MixedGrad, &p1, &ed, None, 0).unwrap();
                let c = assemble(&m, Form::CurlMap, &ed, &fa, None, 0).unwrap();
                let d = assemble(&m, Form::DivMap, &fa, &p0, None, 0).unwrap();
                assert!(c.matmul(&g).values().iter().all(|&v| v == 0.0));
                assert!(d.matmul(&c).values().iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn symmetric_forms_are_bitwise_symmetric() {
        let m = generate_primitive(Primitive::SlabMixed, 2);
        let v = build_space(&m, Family::P1Vector, Bc::on(TAG_T)).unwrap();
        for form in [Form::Mass, Form::Grad, Form::SymGrad, Form::DivDiv] {
            assert!(assemble(&m, form, &v, &v, None, 4).unwrap().is_symmetric_exact());
        }
        let e = build_space(&m, Family::Edge0, Bc::on(TAG_T)).unwrap();
        for form in [Form::Mass, Form::CurlCurl, Form::TensorMass, Form::TensorSym, Form::TensorCurlCurl] {
            assert!(assemble(&m, form, &e, &e, None, 4).unwrap().is_symmetric_exact());
        }
    }

    #[test]
    fn insufficient_quadrature_for_polynomial_coefficient() {
        let m = generate_primitive(Primitive::UnitCube, 1);
        let e = build_space(&m, Family::Edge0, Bc::free()).unwrap();
        let x = crate::poly::Poly::var(0);
        let z = crate::poly::Poly::zero;
        let one = crate::poly::Poly::constant(1.0);
        let f = MatrixCoefficient::polynomial(
            [[x.clone() + one.clone(), z(), z()], [z(), one.clone(), z()], [z(), z(), one]],
            1.0,
        );
        let r = assemble(&m, Form::TensorSymF, &e, &e, Some(&f), 3);
        assert!(matches!(r, Err(FemError::InsufficientQuadrature { needed: 4, given: 3 })));
        assert!(assemble(&m, Form::TensorSymF, &e, &e, Some(&f), 4).is_ok());
    }

    #[test]
    fn face_basis_flux_matches_incidence_sign() {
        // the divergence of a face basis integrates to its outward flux
        let m = generate_primitive(Primitive::UnitCube, 1);
        for t in 0..m.num_tets() {
            let g = TetGeom::new(&m, t);
            for k in 0..4 {
                assert!((g.face_div(k) * g.vol - g.face_sign(k)).abs() < 1e-14);
            }
        }
    }
}
