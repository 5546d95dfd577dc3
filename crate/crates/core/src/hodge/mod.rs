//! Discrete harmonic fields, Helmholtz splits of edge-element vector and
//! tensor fields, and the skew-symmetric and rigid-motion projections.

mod projections;

pub use projections::{
    edge_tensor_means, piecewise_skew, project_rigid_p1, project_rigid_poly, project_so3, project_so3_fn, skew_part,
    RigidProjection,
};

use crate::fem::{assemble, build_space, Bc, DofSpace, Family, FemError, Form, TensorField, DEFAULT_QUAD_ORDER};
use crate::linalg::{null_space_pencil, Deflation, EigOptions, LinalgError, SparseMatrix, SpdFactor, DEFAULT_NULL_TOL};
use crate::mesh::Mesh;
use nalgebra::DMatrix;
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum HodgeError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("field has {got} coefficients, space has {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// Spaces and operators of the lowest-order complex with one essential
/// boundary part, plus factorizations reused across splits.
///
/// The scalar potential space pins one vertex when no vertex is
/// constrained, so gradients are parametrized modulo constants.
pub struct HodgeContext {
    pub edge: DofSpace,
    pub p1: DofSpace,
    pub face: DofSpace,
    /// Edge mass matrix.
    pub mass: SparseMatrix,
    pub curl_curl: SparseMatrix,
    /// Incidence P1 → edge on free dofs.
    pub grad: SparseMatrix,
    /// Incidence edge → face on free dofs.
    pub curl: SparseMatrix,
    /// `Gᵀ M G`, the P1 stiffness on the potential space.
    pub stiffness: SparseMatrix,
    stiffness_factor: Option<SpdFactor>,
    pub harmonic: HarmonicBasis,
}

impl std::fmt::Debug for HodgeContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HodgeContext")
            .field("edge_dofs", &self.edge.num_free())
            .field("potential_dofs", &self.p1.num_free())
            .field("harmonic_dim", &self.harmonic.dim())
            .finish()
    }
}

/// Mass-orthonormal basis of discrete harmonic fields, one per column.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub fields: DMatrix<f64>,
    /// Largest `|curl d|` over the basis.
    pub curl_residual: f64,
    /// Largest `|⟨d, ∇φ⟩_M|` over the basis and the potential basis.
    pub gradient_residual: f64,
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.fields.ncols()
    }

    pub fn field(&self, l: usize) -> Vec<f64> {
        self.fields.column(l).iter().copied().collect()
    }
}

/// Gradient, harmonic and coexact parts of an edge field, with the
/// normalized pairwise mass inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzSplit {
    pub grad_part: Vec<f64>,
    pub harmonic_part: Vec<f64>,
    pub coexact_part: Vec<f64>,
    /// Vertex values of the potential of the gradient part; mean-free over
    /// the vertices when no vertex is constrained.
    pub potential: Vec<f64>,
    /// `|⟨a,b⟩_M| / (|a|_M |b|_M)` for (grad, harmonic), (grad, coexact), (harmonic, coexact).
    pub orthogonality: [f64; 3],
}

impl HelmholtzSplit {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dof,grad,harmonic,coexact\n");
        for i in 0..self.grad_part.len() {
            writeln!(s, "{i},{:e},{:e},{:e}", self.grad_part[i], self.harmonic_part[i], self.coexact_part[i]).unwrap();
        }
        s
    }
}

/// Row-wise split `T = R + S` with `R` curl-free and `S` coexact.
#[derive(Debug, Clone)]
pub struct TensorSplit {
    pub rows: [HelmholtzSplit; 3],
    pub curl_free: TensorField,
    pub coexact: TensorField,
}

fn dense_columns(a: &SparseMatrix) -> DMatrix<f64> {
    a.to_dense()
}

fn normalized_inner(m: &SparseMatrix, a: &[f64], b: &[f64]) -> f64 {
    let na = m.quad_form(a).max(0.0).sqrt();
    let nb = m.quad_form(b).max(0.0).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        m.bilinear(a, b).abs() / (na * nb)
    }
}

impl HodgeContext {
    /// Builds the complex with zero tangential trace on `essential` (or
    /// none) and computes the harmonic basis.
    pub fn new(mesh: &Mesh, essential: Option<u8>, opts: &EigOptions) -> Result<HodgeContext, HodgeError> {
        let bc = match essential {
            Some(t) if mesh.has_tag(t) => Bc::on(t),
            _ => Bc::free(),
        };
        let edge = build_space(mesh, Family::Edge0, bc)?;
        let face = build_space(mesh, Family::Face0, bc)?;
        let mut p1 = build_space(mesh, Family::P1Scalar, bc)?;
        if p1.num_free() == p1.num_full() && p1.num_full() > 0 {
            p1 = p1.pinned(&[0]);
        }
        let mass = assemble(mesh, Form::Mass, &edge, &edge, None, DEFAULT_QUAD_ORDER)?;
        let curl_curl = assemble(mesh, Form::CurlCurl, &edge, &edge, None, DEFAULT_QUAD_ORDER)?;
        let grad = assemble(mesh, Form::MixedGrad, &p1, &edge, None, 0)?;
        let curl = assemble(mesh, Form::CurlMap, &edge, &face, None, 0)?;
        let stiffness = grad.transpose().matmul(&mass).matmul(&grad).symmetrized();
        let stiffness_factor = if p1.num_free() > 0 { Some(SpdFactor::new(&stiffness)?) } else { None };
        let mut ctx = HodgeContext {
            edge,
            p1,
            face,
            mass,
            curl_curl,
            grad,
            curl,
            stiffness,
            stiffness_factor,
            harmonic: HarmonicBasis { fields: DMatrix::zeros(0, 0), curl_residual: 0.0, gradient_residual: 0.0 },
        };
        ctx.harmonic = ctx.compute_harmonic(opts)?;
        Ok(ctx)
    }

    /// True when the potential space fixes one vertex instead of a boundary part.
    pub fn is_pinned(&self) -> bool {
        self.p1.num_free() + 1 == self.p1.num_full() && self.p1.bc().essential.is_none()
    }

    /// Mass-orthogonal projection onto discrete gradients: `(∇u, u)` with
    /// `u` over the free potential dofs.
    pub fn gradient_projection(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let Some(f) = &self.stiffness_factor else {
            return (vec![0.0; v.len()], Vec::new());
        };
        let rhs = self.grad.transpose().mul_vec(&self.mass.mul_vec(v));
        let u = f.solve(&rhs);
        (self.grad.mul_vec(&u), u)
    }

    fn compute_harmonic(&self, opts: &EigOptions) -> Result<HarmonicBasis, HodgeError> {
        let n = self.edge.num_free();
        if n == 0 {
            return Ok(HarmonicBasis { fields: DMatrix::zeros(0, 0), curl_residual: 0.0, gradient_residual: 0.0 });
        }
        let y = dense_columns(&self.grad);
        let ns = null_space_pencil(&self.curl_curl, &self.mass, Deflation::BOrthogonal(&y), DEFAULT_NULL_TOL, opts)?;
        let mut d = ns.basis;
        // strip residual gradient components, then re-orthonormalize
        for l in 0..d.ncols() {
            let col: Vec<f64> = d.column(l).iter().copied().collect();
            let (g, _) = self.gradient_projection(&col);
            for i in 0..n {
                d[(i, l)] -= g[i];
            }
        }
        if d.ncols() > 0 {
            d = crate::linalg::b_orthonormalize(&self.mass, &d);
        }
        let mut curl_residual: f64 = 0.0;
        let mut gradient_residual: f64 = 0.0;
        for l in 0..d.ncols() {
            let col: Vec<f64> = d.column(l).iter().copied().collect();
            curl_residual = curl_residual.max(self.curl_curl.quad_form(&col).max(0.0).sqrt());
            let md = self.mass.mul_vec(&col);
            let gt = self.grad.transpose().mul_vec(&md);
            gradient_residual = gradient_residual.max(gt.iter().fold(0.0, |m: f64, x| m.max(x.abs())));
        }
        Ok(HarmonicBasis { fields: d, curl_residual, gradient_residual })
    }

    /// Splits an edge field into gradient, harmonic and coexact parts.
    pub fn split(&self, v: &[f64]) -> Result<HelmholtzSplit, HodgeError> {
        let n = self.edge.num_free();
        if v.len() != n {
            return Err(HodgeError::LengthMismatch { got: v.len(), expected: n });
        }
        let (grad_part, u) = self.gradient_projection(v);
        let mut potential = if u.is_empty() { vec![0.0; self.p1.num_full()] } else { self.p1.expand(&u) };
        if self.is_pinned() {
            let mean = potential.iter().sum::<f64>() / potential.len() as f64;
            potential.iter_mut().for_each(|u| *u -= mean);
        }
        let mv = self.mass.mul_vec(v);
        let mut harmonic_part = vec![0.0; n];
        for l in 0..self.harmonic.dim() {
            let c: f64 = self.harmonic.fields.column(l).iter().zip(&mv).map(|(d, m)| d * m).sum();
            for i in 0..n {
                harmonic_part[i] += c * self.harmonic.fields[(i, l)];
            }
        }
        let coexact_part: Vec<f64> = (0..n).map(|i| v[i] - grad_part[i] - harmonic_part[i]).collect();
        let orthogonality = [
            normalized_inner(&self.mass, &grad_part, &harmonic_part),
            normalized_inner(&self.mass, &grad_part, &coexact_part),
            normalized_inner(&self.mass, &harmonic_part, &coexact_part),
        ];
        Ok(HelmholtzSplit { grad_part, harmonic_part, coexact_part, potential, orthogonality })
    }

    /// Row-wise split of a tensor field with edge-element rows.
    pub fn split_tensor(&self, t: &TensorField) -> Result<TensorSplit, HodgeError> {
        let rows = [self.split(&t.rows[0])?, self.split(&t.rows[1])?, self.split(&t.rows[2])?];
        let curl_free = TensorField {
            rows: std::array::from_fn(|r| {
                rows[r].grad_part.iter().zip(&rows[r].harmonic_part).map(|(g, h)| g + h).collect()
            }),
        };
        let coexact = TensorField { rows: std::array::from_fn(|r| rows[r].coexact_part.clone()) };
        Ok(TensorSplit { rows, curl_free, coexact })
    }

    /// `Σ_rows ⟨a_r, b_r⟩_M`.
    pub fn tensor_inner(&self, a: &TensorField, b: &TensorField) -> f64 {
        (0..3).map(|r| self.mass.bilinear(&a.rows[r], &b.rows[r])).sum()
    }

    pub fn tensor_norm2(&self, a: &TensorField) -> f64 {
        self.tensor_inner(a, a)
    }

    /// `‖Curl T‖²` via the curl-curl form.
    pub fn tensor_curl_norm2(&self, a: &TensorField) -> f64 {
        (0..3).map(|r| self.curl_curl.quad_form(&a.rows[r])).sum()
    }

    /// Face coefficients of the row-wise curl.
    pub fn tensor_curl(&self, a: &TensorField) -> [Vec<f64>; 3] {
        std::array::from_fn(|r| self.curl.mul_vec(&a.rows[r]))
    }
}

/// Harmonic basis of the complex with zero tangential trace on `essential`.
pub fn harmonic_basis(mesh: &Mesh, essential: Option<u8>, opts: &EigOptions) -> Result<HarmonicBasis, HodgeError> {
    Ok(HodgeContext::new(mesh, essential, opts)?.harmonic)
}
