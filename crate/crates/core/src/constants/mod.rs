//! Optimal discrete Poincaré, Korn and Maxwell constants, the derived bounds
//! of the main inequality, and its discrete certification.

mod certify;
mod pencils;
mod report;
mod study;

pub use certify::{
    certify_main_inequality, certify_weighted, chain_constants, random_tensor_field, run_certification, Certificate,
    CertificationRun, Certifier, ChainConstants, Link,
};
pub use pencils::{
    direct_main_constant, korn_constant_irrotational, korn_constant_standard, korn_constant_tangential,
    korn_constant_weighted, maxwell_constant, poincare_constant, KornMode, MaxwellConstant, StandardKorn, WeightedKorn,
};
pub use report::{compute_report, format_number, ConstantsReport, ReportRequest};
pub use study::{refinement_study, StudyLevel, StudyReport};

use crate::fem::{DofSpace, FemError, Mat3, MatrixCoefficient, TensorField, TetGeom};
use crate::hodge::{HodgeContext, HodgeError};
use crate::linalg::{EigOptions, EigenResult, LinalgError};
use crate::mesh::{Mesh, MeshError, TagSelector, TAG_T};
use crate::quadrature::TetRule;
use serde::Serialize;

/// Eigenvalues below this fraction of `tr A / tr B` count as kernel.
pub const KERNEL_REL_TOL: f64 = 1e-8;

/// Relative slack for certification margins and derived-bound comparisons.
pub const CERTIFY_SLACK: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum ConstantsError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Hodge(#[from] HodgeError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("{name}: undeflated kernel of dimension {dim} (smallest eigenvalue {eigenvalue:e})")]
    Kernel { name: String, eigenvalue: f64, dim: usize },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Clone)]
pub struct ConstantsOptions {
    pub eig: EigOptions,
    pub quad_order: usize,
}

impl Default for ConstantsOptions {
    fn default() -> Self {
        ConstantsOptions { eig: EigOptions::default(), quad_order: crate::fem::DEFAULT_QUAD_ORDER }
    }
}

/// One optimal constant `1/√λ_min` with its eigenvalue data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantRecord {
    pub name: String,
    pub value: f64,
    /// `+∞` for an empty space, where the value is 0.
    pub eigenvalue: f64,
    /// `|A x - λ B x|` of the B-normalized eigenvector.
    pub residual: f64,
    /// Dimension of the searched space.
    pub dim: usize,
    pub note: Option<String>,
}

impl ConstantRecord {
    pub fn empty(name: &str) -> ConstantRecord {
        ConstantRecord {
            name: name.into(),
            value: 0.0,
            eigenvalue: f64::INFINITY,
            residual: 0.0,
            dim: 0,
            note: Some("EmptySpace: no free degrees of freedom".into()),
        }
    }

    pub fn from_eigenvalue(name: &str, eigenvalue: f64, residual: f64, dim: usize) -> ConstantRecord {
        ConstantRecord { name: name.into(), value: 1.0 / eigenvalue.sqrt(), eigenvalue, residual, dim, note: None }
    }

    fn from_result(name: &str, r: &EigenResult) -> ConstantRecord {
        if r.is_empty() {
            return Self::empty(name);
        }
        Self::from_eigenvalue(name, r.values[0], r.residuals[0], r.search_dim)
    }

    pub fn renamed(&self, name: &str) -> ConstantRecord {
        ConstantRecord { name: name.into(), ..self.clone() }
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalue == f64::INFINITY
    }
}

/// `ĉ = max{√2 c_k, c_m √(1+2c_k²)}` and `c̃ = √2 max{c_k, c_m(1+c_k)}`.
pub fn derived_bounds(c_k: f64, c_m: f64) -> Result<(f64, f64), ConstantsError> {
    if !(c_k > 0.0) {
        return Err(ConstantsError::NonPositive { name: "c_k", value: c_k });
    }
    if !(c_m > 0.0) {
        return Err(ConstantsError::NonPositive { name: "c_m", value: c_m });
    }
    let s2 = std::f64::consts::SQRT_2;
    let c_hat = (s2 * c_k).max(c_m * (1.0 + 2.0 * c_k * c_k).sqrt());
    let c_tilde = s2 * c_k.max(c_m * (1.0 + c_k));
    debug_assert!(c_tilde >= c_hat);
    Ok((c_hat, c_tilde))
}

/// `ĉ_F = max{√2 c_k,F, c_m √(1+2 c_k,F² c_F²)}`.
pub fn derived_bound_weighted(c_k_f: f64, c_m: f64, c_f: f64) -> Result<f64, ConstantsError> {
    for (name, v) in [("c_k_F", c_k_f), ("c_m", c_m), ("c_F", c_f)] {
        if !(v > 0.0) {
            return Err(ConstantsError::NonPositive { name, value: v });
        }
    }
    let s2 = std::f64::consts::SQRT_2;
    Ok((s2 * c_k_f).max(c_m * (1.0 + 2.0 * c_k_f * c_k_f * c_f * c_f).sqrt()))
}

/// `(c_F, μ_observed)`: the largest spectral norm and the smallest
/// determinant of `F` over the quadrature points of the given order.
///
/// These are the points the weighted forms are assembled with, so
/// `‖sym(S F)‖ ≤ c_F ‖S‖` holds exactly for the assembled norms.
pub fn matrix_coefficient_norm(mesh: &Mesh, f: &MatrixCoefficient, quad_order: usize) -> Result<(f64, f64), FemError> {
    let rule = TetRule::new(quad_order);
    let mut c_f: f64 = 0.0;
    let mut mu = f64::INFINITY;
    for k in 0..mesh.num_tets() {
        let g = TetGeom::new(mesh, k);
        for l in &rule.bary {
            let m = f.eval(g.point(l));
            c_f = c_f.max(crate::fem::spectral_norm(&m));
            mu = mu.min(f.det_at(g.point(l)));
        }
    }
    if !(mu > 0.0) {
        return Err(FemError::NonPositiveDeterminant { value: mu });
    }
    if mu < f.mu * (1.0 - 1e-12) {
        return Err(FemError::DeterminantBelowBound { observed: mu, mu: f.mu });
    }
    Ok((c_f, mu))
}

/// Quadrature order at which the weighted form with `f` is exact, if any.
pub fn weighted_quad_order(f: &MatrixCoefficient, base: usize) -> usize {
    match f.degree() {
        Some(d) => base.max(2 + 2 * d),
        None => base,
    }
}

/// The `q`-form Poincaré constant: q = 0 and 3 are the scalar constants on
/// Γ_t and Γ_n, q = 1 and 2 the Maxwell constants with the boundary parts in
/// the same and in swapped roles.
pub fn generalized_poincare(q: u8, mesh: &Mesh, opts: &ConstantsOptions) -> Result<ConstantRecord, ConstantsError> {
    let name = format!("c_p_{q}");
    let swapped = || TagSelector::Complement.apply(mesh);
    let maxwell = |m: &Mesh| -> Result<ConstantRecord, ConstantsError> {
        let ctx = HodgeContext::new(m, Some(TAG_T), &opts.eig)?;
        Ok(maxwell_constant(m, &ctx, opts)?.record)
    };
    Ok(match q {
        0 => poincare_constant(mesh, opts)?,
        1 => maxwell(mesh)?,
        2 => maxwell(&swapped()?)?,
        3 => poincare_constant(&swapped()?, opts)?,
        _ => return Err(ConstantsError::Unsupported(format!("form degree {q} is not in 0..=3"))),
    }
    .renamed(&name))
}

/// Orthonormal basis of so(3) in the Frobenius inner product.
pub fn so3_basis() -> [Mat3; 3] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        [[0.0, s, 0.0], [-s, 0.0, 0.0], [0.0, 0.0, 0.0]],
        [[0.0, 0.0, s], [0.0, 0.0, 0.0], [-s, 0.0, 0.0]],
        [[0.0, 0.0, 0.0], [0.0, 0.0, s], [0.0, -s, 0.0]],
    ]
}

/// Edge-element tensor field with the constant value `m`: each row's edge
/// moments are `(x_b - x_a) · m_r`.
pub fn constant_tensor_field(mesh: &Mesh, space: &DofSpace, m: &Mat3) -> TensorField {
    let x = mesh.vertices();
    let rows = std::array::from_fn(|r| {
        let full: Vec<f64> =
            mesh.edges().iter().map(|&[a, b]| (0..3).map(|j| (x[b][j] - x[a][j]) * m[r][j]).sum()).collect();
        space.restrict(&full)
    });
    TensorField { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_primitive, Primitive};

    #[test]
    fn derived_bounds_arithmetic() {
        let (h, t) = derived_bounds(2f64.sqrt(), 1.0).unwrap();
        assert!((h - 5f64.sqrt()).abs() < 1e-15);
        assert!(t >= h);
        let (h, t) = derived_bounds(1.0, 1.0).unwrap();
        assert!((h - 3f64.sqrt()).abs() < 1e-15);
        assert!((t - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!(derived_bounds(0.0, 1.0).is_err());
        assert!(derived_bounds(1.0, -1.0).is_err());
    }

    #[test]
    fn weighted_bound_reduces_to_unweighted() {
        let (h, _) = derived_bounds(1.3, 0.4).unwrap();
        assert_eq!(derived_bound_weighted(1.3, 0.4, 1.0).unwrap(), h);
    }

    #[test]
    fn coefficient_norms() {
        let m = generate_primitive(Primitive::UnitCube, 1);
        assert_eq!(matrix_coefficient_norm(&m, &MatrixCoefficient::identity(), 2).unwrap(), (1.0, 1.0));
        let (c, mu) = matrix_coefficient_norm(&m, &MatrixCoefficient::diagonal([2.0, 1.0, 1.0]), 2).unwrap();
        assert!((c - 2.0).abs() < 1e-14 && (mu - 2.0).abs() < 1e-14);
        let bad = MatrixCoefficient::diagonal([1.0, 1.0, -1.0]);
        assert!(matches!(matrix_coefficient_norm(&m, &bad, 2), Err(FemError::NonPositiveDeterminant { .. })));
        let low = MatrixCoefficient::identity().with_mu(2.0);
        assert!(matches!(matrix_coefficient_norm(&m, &low, 2), Err(FemError::DeterminantBelowBound { .. })));
    }

    #[test]
    fn empty_record_is_zero() {
        let r = ConstantRecord::empty("c_p");
        assert_eq!(r.value, 0.0);
        assert_eq!(1.0 / r.eigenvalue.sqrt(), r.value);
    }
}
