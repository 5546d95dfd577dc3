//! Squared norms of discrete and polynomial fields by quadrature.
//!
//! This route never touches assembled matrices, so it serves as an
//! independent check on the quadratic forms built by `assemble`.

use super::coefficient::Mat3;
use super::element::{TetGeom, Vec3};
use super::{DofSpace, Family, FemError, TensorField};
use crate::mesh::Mesh;
use crate::poly::{curl, divergence, jacobian, PolyVec};
use crate::quadrature::TetRule;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    Grad,
    /// `‖sym ∇v‖` (or `‖sym T‖` for tensors).
    Sym,
    /// `‖skew ∇v‖` (or `‖skew T‖` for tensors).
    Skew,
    /// `‖dev_α sym ∇v‖` with `dev_α A = A - α tr(A) Id`.
    DevAlpha(f64),
    Curl,
    Div,
}

impl NormKind {
    pub fn name(&self) -> String {
        match self {
            NormKind::L2 => "L2".into(),
            NormKind::Grad => "grad".into(),
            NormKind::Sym => "sym".into(),
            NormKind::Skew => "skew".into(),
            NormKind::DevAlpha(a) => format!("dev_alpha({a})"),
            NormKind::Curl => "curl".into(),
            NormKind::Div => "div".into(),
        }
    }
}

/// Pointwise data of a field; `None` where the family has no such derivative.
#[derive(Default)]
struct Sample {
    value: Vec3,
    jac: Option<Mat3>,
    curl: Option<Vec3>,
    div: Option<f64>,
}

fn fro2(m: &Mat3) -> f64 {
    m.iter().flatten().map(|x| x * x).sum()
}

fn sym_part(m: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (m[i][j] + m[j][i])))
}

fn skew_part(m: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (m[i][j] - m[j][i])))
}

fn dev(m: &Mat3, alpha: f64) -> Mat3 {
    let tr = m[0][0] + m[1][1] + m[2][2];
    let mut out = *m;
    for (i, row) in out.iter_mut().enumerate() {
        row[i] -= alpha * tr;
    }
    out
}

fn density(kind: NormKind, s: &Sample) -> f64 {
    match kind {
        NormKind::L2 => s.value.iter().map(|x| x * x).sum(),
        NormKind::Grad => fro2(s.jac.as_ref().unwrap()),
        NormKind::Sym => fro2(&sym_part(s.jac.as_ref().unwrap())),
        NormKind::Skew => fro2(&skew_part(s.jac.as_ref().unwrap())),
        NormKind::DevAlpha(a) => fro2(&dev(&sym_part(s.jac.as_ref().unwrap()), a)),
        NormKind::Curl => s.curl.unwrap().iter().map(|x| x * x).sum(),
        NormKind::Div => s.div.unwrap().powi(2),
    }
}

fn check_available(family: Family, which: &[NormKind]) -> Result<(), FemError> {
    for &k in which {
        let ok = match family {
            Family::P1Vector => true,
            Family::P1Scalar => matches!(k, NormKind::L2 | NormKind::Grad),
            Family::Edge0 => matches!(k, NormKind::L2 | NormKind::Curl),
            Family::Face0 => matches!(k, NormKind::L2 | NormKind::Div),
            Family::P0Scalar => k == NormKind::L2,
        };
        if !ok {
            return Err(FemError::UndefinedNorm { norm: k.name(), family });
        }
    }
    Ok(())
}

/// Samples of a discrete field on one tet at the rule's points. `full` is
/// indexed by full dofs of `family`.
fn tet_samples(mesh: &Mesh, family: Family, full: &[f64], t: usize, rule: &TetRule) -> Vec<Sample> {
    let g = TetGeom::new(mesh, t);
    let nv = mesh.num_vertices();
    match family {
        Family::P1Scalar | Family::P1Vector => {
            let ncomp = if family == Family::P1Scalar { 1 } else { 3 };
            let coef: Vec<[f64; 4]> = (0..ncomp).map(|k| g.verts.map(|v| full[k * nv + v])).collect();
            let mut jac = [[0.0; 3]; 3];
            for k in 0..ncomp {
                for i in 0..4 {
                    for j in 0..3 {
                        jac[k][j] += coef[k][i] * g.grads[i][j];
                    }
                }
            }
            let curl = [jac[2][1] - jac[1][2], jac[0][2] - jac[2][0], jac[1][0] - jac[0][1]];
            let div = jac[0][0] + jac[1][1] + jac[2][2];
            rule.bary
                .iter()
                .map(|l| {
                    let mut value = [0.0; 3];
                    for k in 0..ncomp {
                        value[k] = (0..4).map(|i| l[i] * coef[k][i]).sum();
                    }
                    if family == Family::P1Scalar {
                        Sample { value, jac: Some(jac), ..Default::default() }
                    } else {
                        Sample { value, jac: Some(jac), curl: Some(curl), div: Some(div) }
                    }
                })
                .collect()
        }
        Family::Edge0 => {
            let c = mesh.tet_edges(t).map(|e| full[e]);
            let mut curl = [0.0; 3];
            for e in 0..6 {
                super::element::axpy(c[e], g.edge_curl(e), &mut curl);
            }
            rule.bary
                .iter()
                .map(|l| {
                    let mut value = [0.0; 3];
                    for e in 0..6 {
                        super::element::axpy(c[e], g.edge_basis(e, l), &mut value);
                    }
                    Sample { value, curl: Some(curl), ..Default::default() }
                })
                .collect()
        }
        Family::Face0 => {
            let c = mesh.tet_faces(t).map(|f| full[f]);
            let div: f64 = (0..4).map(|k| c[k] * g.face_div(k)).sum();
            rule.bary
                .iter()
                .map(|l| {
                    let mut value = [0.0; 3];
                    for k in 0..4 {
                        super::element::axpy(c[k], g.face_basis(k, l), &mut value);
                    }
                    Sample { value, div: Some(div), ..Default::default() }
                })
                .collect()
        }
        Family::P0Scalar => {
            rule.bary.iter().map(|_| Sample { value: [full[t], 0.0, 0.0], ..Default::default() }).collect()
        }
    }
}

/// Sums per-tet contributions in tet order so the result is reproducible.
fn integrate(
    mesh: &Mesh,
    quad_order: usize,
    n: usize,
    per_point: impl Fn(usize, &TetRule) -> Vec<Vec<f64>> + Sync,
) -> Vec<f64> {
    let rule = TetRule::new(quad_order);
    let parts: Vec<Vec<f64>> = (0..mesh.num_tets())
        .into_par_iter()
        .map(|t| {
            let vol = mesh.volume(t);
            let mut acc = vec![0.0; n];
            for (d, w) in per_point(t, &rule).iter().zip(&rule.weights) {
                for k in 0..n {
                    acc[k] += w * vol * d[k];
                }
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; n];
    for p in parts {
        for k in 0..n {
            out[k] += p[k];
        }
    }
    out
}

/// Squared norms of the discrete field with free coefficients `free`, in the order of `which`.
pub fn evaluate_norms(
    mesh: &Mesh,
    space: &DofSpace,
    free: &[f64],
    which: &[NormKind],
    quad_order: usize,
) -> Result<Vec<f64>, FemError> {
    check_available(space.family(), which)?;
    if free.len() != space.num_free() {
        return Err(FemError::SpaceMismatch(format!("{} coefficients for {} free dofs", free.len(), space.num_free())));
    }
    let full = space.expand(free);
    Ok(integrate(mesh, quad_order, which.len(), |t, rule| {
        tet_samples(mesh, space.family(), &full, t, rule)
            .iter()
            .map(|s| which.iter().map(|&k| density(k, s)).collect())
            .collect()
    }))
}

/// Squared norms of a tensor field with edge-element rows. `L2`, `Sym`,
/// `Skew` and `DevAlpha` act on the matrix itself, `Curl` row-wise.
pub fn evaluate_tensor_norms(
    mesh: &Mesh,
    space: &DofSpace,
    field: &TensorField,
    which: &[NormKind],
    quad_order: usize,
) -> Result<Vec<f64>, FemError> {
    for &k in which {
        let ok = space.family() == Family::Edge0 && !matches!(k, NormKind::Grad | NormKind::Div);
        if !ok {
            return Err(FemError::UndefinedNorm { norm: format!("tensor {}", k.name()), family: space.family() });
        }
    }
    if field.row_len() != space.num_free() {
        return Err(FemError::SpaceMismatch("tensor rows do not match the space".into()));
    }
    let full: [Vec<f64>; 3] = std::array::from_fn(|r| space.expand(&field.rows[r]));
    Ok(integrate(mesh, quad_order, which.len(), |t, rule| {
        let rows: [Vec<Sample>; 3] = std::array::from_fn(|r| tet_samples(mesh, Family::Edge0, &full[r], t, rule));
        (0..rule.weights.len())
            .map(|q| {
                let m: Mat3 = std::array::from_fn(|r| rows[r][q].value);
                let s = Sample { value: [0.0; 3], jac: Some(m), ..Default::default() };
                which
                    .iter()
                    .map(|&k| match k {
                        NormKind::L2 => fro2(&m),
                        NormKind::Curl => (0..3).map(|r| density(NormKind::Curl, &rows[r][q])).sum(),
                        NormKind::Sym | NormKind::Skew | NormKind::DevAlpha(_) => density(k, &s),
                        NormKind::Grad | NormKind::Div => unreachable!(),
                    })
                    .collect()
            })
            .collect()
    }))
}

/// Squared norms of a polynomial vector field over the mesh, in the order of `which`.
pub fn evaluate_norms_poly(mesh: &Mesh, v: &PolyVec, which: &[NormKind], quad_order: usize) -> Vec<f64> {
    let jac = jacobian(v);
    let cu = curl(v);
    let dv = divergence(v);
    integrate(mesh, quad_order, which.len(), |t, rule| {
        let g = TetGeom::new(mesh, t);
        rule.bary
            .iter()
            .map(|l| {
                let x = g.point(l);
                let s = Sample {
                    value: [0, 1, 2].map(|k| v[k].eval(x)),
                    jac: Some(std::array::from_fn(|i| std::array::from_fn(|j| jac[i][j].eval(x)))),
                    curl: Some([0, 1, 2].map(|k| cu[k].eval(x))),
                    div: Some(dv.eval(x)),
                };
                which.iter().map(|&k| density(k, &s)).collect()
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, build_space, interpolate, AnalyticField, Bc, Form};
    use crate::mesh::{generate_primitive, Primitive};
    use crate::poly::Poly;

    #[test]
    fn position_field_norms() {
        let m = generate_primitive(Primitive::UnitCube, 2);
        let s = build_space(&m, Family::P1Vector, Bc::free()).unwrap();
        let x = interpolate(&m, &s, &AnalyticField::vector(|p| p), 4).unwrap();
        let which = [NormKind::Div, NormKind::Sym, NormKind::DevAlpha(1.0 / 3.0), NormKind::Curl];
        let n = evaluate_norms(&m, &s, &x, &which, 4).unwrap();
        assert!((n[0] - 9.0).abs() < 1e-12);
        assert!((n[1] - 3.0).abs() < 1e-12);
        assert!(n[2].abs() < 1e-12);
        assert!(n[3].abs() < 1e-12);
    }

    #[test]
    fn undefined_norms() {
        let m = generate_primitive(Primitive::UnitCube, 1);
        let s = build_space(&m, Family::P0Scalar, Bc::free()).unwrap();
        let r = evaluate_norms(&m, &s, &vec![0.0; s.num_free()], &[NormKind::Curl], 2);
        assert!(matches!(r, Err(FemError::UndefinedNorm { .. })));
    }

    #[test]
    fn quadrature_norms_match_assembled_forms() {
        let m = generate_primitive(Primitive::SlabMixed, 2);
        let s = build_space(&m, Family::Edge0, Bc::gamma_t(&m)).unwrap();
        let x: Vec<f64> = (0..s.num_free()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let n = evaluate_norms(&m, &s, &x, &[NormKind::L2, NormKind::Curl], 4).unwrap();
        let mass = assemble(&m, Form::Mass, &s, &s, None, 4).unwrap();
        let cc = assemble(&m, Form::CurlCurl, &s, &s, None, 4).unwrap();
        assert!((n[0] - mass.quad_form(&x)).abs() < 1e-10 * n[0]);
        assert!((n[1] - cc.quad_form(&x)).abs() < 1e-10 * n[1]);
    }

    #[test]
    fn bubble_symgrad_identity() {
        let m = generate_primitive(Primitive::UnitCube, 2);
        let v = [Poly::bubble(), Poly::zero(), Poly::zero()];
        let n = evaluate_norms_poly(&m, &v, &[NormKind::Sym, NormKind::Grad, NormKind::Div], 12);
        assert!((n[0] - 0.5 * (n[1] + n[2])).abs() < 1e-13);
    }
}
