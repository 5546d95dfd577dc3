//! Machine-precision checks of the elementary Korn identities, the skew
//! embeddings and the rigid-motion projections, on polynomial fields over the
//! unit cube with quadrature that is exact by degree counting.

mod korn;
mod projections;
mod skew;
mod suite;

pub use korn::{
    c_alpha, c_tilde_alpha, verify_dev_identity, verify_estimate_suite, verify_symgrad_identity, DevIdentity, Estimate,
    EstimateStatus, SymgradIdentity, ESTIMATE_TOL,
};
pub use projections::{
    rigid_projection, so3_projection, translation_projection, verify_projection_orthogonality,
    verify_tensor_so3_orthogonality, ProjectionResiduals, RigidMotion, RmEquivalence,
};
pub use skew::{embed_skew_scalar, embed_skew_vector, tensor_curl, SkewRelation, SkewScalarEmbedding, SkewVectorCheck};
pub use suite::{run_identity_suite, CheckKind, CheckRow, IdentitySuite, SuiteOptions, IDENTITY_TOL};

use crate::fem::Mat3;
use crate::poly::{jacobian, monomials, power_table, Poly, PolyVec};
use crate::quadrature::CubeRule;
use rand::Rng;

type Vec3 = [f64; 3];

/// A 3×3 matrix of polynomials.
pub type PolyMat = [[Poly; 3]; 3];

/// Spatial dimension the identities are instantiated in.
pub const DIM: usize = 3;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum IdentityError {
    #[error("field does not vanish on the boundary of the unit cube")]
    NoZeroTrace,
}

/// A polynomial vector field on the unit cube, optionally multiplied by the
/// bubble `∏ x_i (1 - x_i)` so that its trace vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField {
    base: PolyVec,
    bubble: bool,
    components: PolyVec,
}

impl PolyField {
    pub fn new(base: PolyVec) -> PolyField {
        PolyField { components: base.clone(), base, bubble: false }
    }

    pub fn with_bubble(base: PolyVec) -> PolyField {
        let b = Poly::bubble();
        let components = std::array::from_fn(|i| &base[i] * &b);
        PolyField { base, bubble: true, components }
    }

    /// Components with coefficients uniform in `[-1, 1]` on every monomial of
    /// a base degree drawn uniformly from `0..=max_degree`.
    pub fn random(max_degree: u32, bubble: bool, rng: &mut impl Rng) -> PolyField {
        let d = rng.random_range(0..=max_degree);
        let base = std::array::from_fn(|_| {
            monomials(d).into_iter().fold(Poly::zero(), |p, e| p + Poly::monomial(rng.random_range(-1.0..1.0), e))
        });
        if bubble {
            PolyField::with_bubble(base)
        } else {
            PolyField::new(base)
        }
    }

    pub fn components(&self) -> &PolyVec {
        &self.components
    }

    pub fn has_bubble(&self) -> bool {
        self.bubble
    }

    /// Degree before the bubble factor.
    pub fn base_degree(&self) -> u32 {
        self.base.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(Poly::degree).max().unwrap_or(0)
    }

    /// True when every component restricts to zero on all six faces, up to
    /// roundoff relative to its coefficients.
    pub fn has_zero_trace(&self) -> bool {
        self.components.iter().all(|p| {
            let tol = 1e-12 * p.max_coeff().max(1.0);
            (0..3).all(|axis| [0.0, 1.0].iter().all(|&x| p.substitute(axis, x).max_coeff() <= tol))
        })
    }

    /// Samples at a cube rule exact for products of the components.
    pub fn sample(&self) -> Sampled {
        Sampled::new(self, 2 * self.degree() as usize)
    }
}

/// Values and gradients of a field at the points of a tensor Gauss rule.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub weights: Vec<f64>,
    pub values: Vec<Vec3>,
    pub grads: Vec<Mat3>,
    pub zero_trace: bool,
}

impl Sampled {
    /// Samples at a rule exact for polynomials of degree `quad_degree`.
    pub fn new(v: &PolyField, quad_degree: usize) -> Sampled {
        let rule = CubeRule::new(quad_degree.max(1));
        let jac = jacobian(v.components());
        let deg = v.degree();
        let mut values = Vec::with_capacity(rule.points.len());
        let mut grads = Vec::with_capacity(rule.points.len());
        for x in &rule.points {
            let pw = power_table(*x, deg);
            values.push(std::array::from_fn(|i| v.components()[i].eval_powers(&pw)));
            grads.push(std::array::from_fn(|i| std::array::from_fn(|j| jac[i][j].eval_powers(&pw))));
        }
        Sampled { weights: rule.weights, values, grads, zero_trace: v.has_zero_trace() }
    }

    /// `∫ f(v, ∇v)` over the unit cube.
    pub fn integrate(&self, f: impl Fn(&Vec3, &Mat3) -> f64) -> f64 {
        self.weights.iter().zip(self.values.iter().zip(&self.grads)).map(|(w, (v, g))| w * f(v, g)).sum()
    }

    pub fn norms(&self) -> GradientNorms {
        GradientNorms {
            value: self.integrate(|v, _| v.iter().map(|x| x * x).sum()),
            grad: self.integrate(|_, g| frob2(g)),
            sym: self.integrate(|_, g| frob2(&sym(g))),
            div: self.integrate(|_, g| trace(g).powi(2)),
            curl: self.integrate(|_, g| curl_of_grad(g).iter().map(|x| x * x).sum()),
        }
    }

    /// `‖dev_α sym ∇v‖²`, from the pointwise deviator.
    pub fn dev_sym_norm2(&self, alpha: f64) -> f64 {
        self.integrate(|_, g| frob2(&dev(&sym(g), alpha)))
    }
}

/// Squared L² norms of `v` and of derived quantities of `∇v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientNorms {
    pub value: f64,
    pub grad: f64,
    pub sym: f64,
    pub div: f64,
    pub curl: f64,
}

fn frob2(m: &Mat3) -> f64 {
    m.iter().flatten().map(|x| x * x).sum()
}

fn trace(m: &Mat3) -> f64 {
    m[0][0] + m[1][1] + m[2][2]
}

fn sym(m: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (m[i][j] + m[j][i])))
}

/// `T - α tr(T) Id`.
fn dev(m: &Mat3, alpha: f64) -> Mat3 {
    let t = trace(m);
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] - if i == j { alpha * t } else { 0.0 }))
}

/// `curl v` from `(∇v)_ij = ∂_j v_i`.
fn curl_of_grad(g: &Mat3) -> Vec3 {
    [g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1]]
}
