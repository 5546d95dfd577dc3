//! Canonical degree-of-freedom interpolation of analytic fields.

use super::element::Vec3;
use super::{DofSpace, Family, FemError, TensorField};
use crate::mesh::{cross, dot3, Mesh, Point};
use crate::poly::{Poly, PolyVec};
use crate::quadrature::{gauss_legendre, TetRule, TriRule};
use std::sync::Arc;

/// Absolute tolerance on boundary-condition violations.
const BC_TOL: f64 = 1e-12;

/// A scalar or vector field given pointwise.
#[derive(Clone)]
pub enum AnalyticField {
    Scalar(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
    Vector(Arc<dyn Fn(Point) -> Vec3 + Send + Sync>),
}

impl std::fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AnalyticField::Scalar(_) => f.write_str("AnalyticField::Scalar"),
            AnalyticField::Vector(_) => f.write_str("AnalyticField::Vector"),
        }
    }
}

impl AnalyticField {
    pub fn scalar(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> AnalyticField {
        AnalyticField::Scalar(Arc::new(f))
    }

    pub fn vector(f: impl Fn(Point) -> Vec3 + Send + Sync + 'static) -> AnalyticField {
        AnalyticField::Vector(Arc::new(f))
    }

    pub fn from_poly(p: &Poly) -> AnalyticField {
        let p = p.clone();
        Self::scalar(move |x| p.eval(x))
    }

    pub fn from_poly_vec(v: &PolyVec) -> AnalyticField {
        let v = v.clone();
        Self::vector(move |x| [v[0].eval(x), v[1].eval(x), v[2].eval(x)])
    }

    fn scalar_at(&self, x: Point) -> Result<f64, FemError> {
        match self {
            AnalyticField::Scalar(f) => Ok(f(x)),
            AnalyticField::Vector(_) => Err(FemError::SpaceMismatch("vector field given for a scalar space".into())),
        }
    }

    fn vector_at(&self, x: Point) -> Result<Vec3, FemError> {
        match self {
            AnalyticField::Vector(f) => Ok(f(x)),
            AnalyticField::Scalar(_) => Err(FemError::SpaceMismatch("scalar field given for a vector space".into())),
        }
    }
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    [0, 1, 2].map(|k| a[k] + t * (b[k] - a[k]))
}

/// Full dof values: vertex values, edge tangential moments, face fluxes
/// through the sorted-triple normal, or cell means.
fn full_dofs(mesh: &Mesh, family: Family, field: &AnalyticField, quad_order: usize) -> Result<Vec<f64>, FemError> {
    let x = mesh.vertices();
    Ok(match family {
        Family::P1Scalar => x.iter().map(|&p| field.scalar_at(p)).collect::<Result<_, _>>()?,
        Family::P1Vector => {
            let vals: Vec<Vec3> = x.iter().map(|&p| field.vector_at(p)).collect::<Result<_, _>>()?;
            (0..3).flat_map(|k| vals.iter().map(move |v| v[k])).collect()
        }
        Family::Edge0 => {
            let (s, w) = gauss_legendre((quad_order + 1).div_ceil(2).max(1));
            let mut out = Vec::with_capacity(mesh.num_edges());
            for &[a, b] in mesh.edges() {
                let t = [0, 1, 2].map(|k| x[b][k] - x[a][k]);
                let mut m = 0.0;
                for (si, wi) in s.iter().zip(&w) {
                    m += wi * dot3(field.vector_at(lerp(x[a], x[b], *si))?, t);
                }
                out.push(m);
            }
            out
        }
        Family::Face0 => {
            let rule = TriRule::new(quad_order);
            let mut out = Vec::with_capacity(mesh.num_faces());
            for &[a, b, c] in mesh.faces() {
                let n = cross([0, 1, 2].map(|k| x[b][k] - x[a][k]), [0, 1, 2].map(|k| x[c][k] - x[a][k]));
                let mut flux = 0.0;
                for (l, w) in rule.bary.iter().zip(&rule.weights) {
                    let p = [0, 1, 2].map(|k| l[0] * x[a][k] + l[1] * x[b][k] + l[2] * x[c][k]);
                    flux += w * 0.5 * dot3(field.vector_at(p)?, n);
                }
                out.push(flux);
            }
            out
        }
        Family::P0Scalar => {
            let rule = TetRule::new(quad_order);
            let mut out = Vec::with_capacity(mesh.num_tets());
            for t in 0..mesh.num_tets() {
                let pts = mesh.tet_points(t);
                let mut mean = 0.0;
                for (l, w) in rule.bary.iter().zip(&rule.weights) {
                    let p = [0, 1, 2].map(|k| (0..4).map(|i| l[i] * pts[i][k]).sum::<f64>());
                    mean += w * field.scalar_at(p)?;
                }
                out.push(mean);
            }
            out
        }
    })
}

/// Interpolates `field` into `space`, returning free coefficients.
///
/// Eliminated dofs must vanish and grouped dofs must agree, both to 1e-12.
pub fn interpolate(
    mesh: &Mesh,
    space: &DofSpace,
    field: &AnalyticField,
    quad_order: usize,
) -> Result<Vec<f64>, FemError> {
    let full = full_dofs(mesh, space.family(), field, quad_order)?;
    let free = space.restrict(&full);
    for (d, f) in space.free_map().iter().enumerate() {
        let expected = f.map_or(0.0, |i| free[i]);
        if (full[d] - expected).abs() > BC_TOL {
            return Err(FemError::BoundaryConditionViolated { dof: d, value: full[d] - expected });
        }
    }
    Ok(free)
}

/// Row-wise interpolation of a tensor field into an edge or P1 vector space.
pub fn interpolate_tensor(
    mesh: &Mesh,
    space: &DofSpace,
    rows: &[AnalyticField; 3],
    quad_order: usize,
) -> Result<TensorField, FemError> {
    let r0 = interpolate(mesh, space, &rows[0], quad_order)?;
    let r1 = interpolate(mesh, space, &rows[1], quad_order)?;
    let r2 = interpolate(mesh, space, &rows[2], quad_order)?;
    Ok(TensorField { rows: [r0, r1, r2] })
}
