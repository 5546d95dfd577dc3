//! The partial-integration identity for `sym ∇v`, the deviatoric identity
//! and the inequalities that follow from them.

use super::{GradientNorms, IdentityError, Sampled, DIM};
use serde::Serialize;

/// Estimates hold when their relative margin is at least `-ESTIMATE_TOL`.
pub const ESTIMATE_TOL: f64 = 1e-12;

/// `c_α = α(Nα - 2)`.
pub fn c_alpha(alpha: f64, n: usize) -> f64 {
    alpha * (n as f64 * alpha - 2.0)
}

/// `c̃_α = N(α - 1/N)²`.
pub fn c_tilde_alpha(alpha: f64, n: usize) -> f64 {
    let n = n as f64;
    n * (alpha - 1.0 / n).powi(2)
}

fn rel(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff.abs() / scale
    } else {
        diff.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymgradIdentity {
    pub norms: GradientNorms,
    /// `‖sym ∇v‖² - ½(‖∇v‖² + ‖div v‖²)`, relative.
    pub residual_grad_div: f64,
    /// `‖sym ∇v‖² - ½‖curl v‖² - ‖div v‖²`, relative.
    pub residual_curl_div: f64,
}

/// Checks both forms of `‖sym ∇v‖²` that hold for fields with zero trace.
pub fn verify_symgrad_identity(s: &Sampled) -> Result<SymgradIdentity, IdentityError> {
    if !s.zero_trace {
        return Err(IdentityError::NoZeroTrace);
    }
    let n = s.norms();
    Ok(SymgradIdentity {
        norms: n,
        residual_grad_div: rel(n.sym - 0.5 * (n.grad + n.div), n.sym + 0.5 * (n.grad + n.div)),
        residual_curl_div: rel(n.sym - 0.5 * n.curl - n.div, n.sym + 0.5 * n.curl + n.div),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DevIdentity {
    pub alpha: f64,
    pub c_alpha: f64,
    pub c_tilde: f64,
    /// `‖dev_α sym ∇v‖²`.
    pub dev: f64,
    /// `‖dev_α sym ∇v‖² - ‖sym ∇v‖² - c_α ‖div v‖²`, relative.
    pub residual: f64,
    /// Largest error in the shifted forms `c_α + s = c̃_α + s - 1/N` for
    /// `s = 0, ½, 1`.
    pub constants_residual: f64,
    /// For zero-trace fields, the residuals of `‖dev_α sym ∇v‖²` expressed
    /// through `(∇v, div)`, `(curl, div)`, `(sym, ∇v)` and `(sym, curl)`.
    pub zero_trace_residuals: Option<[f64; 4]>,
}

impl DevIdentity {
    pub fn max_residual(&self) -> f64 {
        self.zero_trace_residuals.into_iter().flatten().fold(self.residual.max(self.constants_residual), f64::max)
    }
}

/// Checks `‖dev_α sym ∇v‖² = ‖sym ∇v‖² + c_α ‖div v‖²`, which needs no
/// boundary condition, and its combinations with the symgrad identity when
/// the trace vanishes.
pub fn verify_dev_identity(s: &Sampled, alpha: f64) -> DevIdentity {
    let n = s.norms();
    let c = c_alpha(alpha, DIM);
    let ct = c_tilde_alpha(alpha, DIM);
    let nf = DIM as f64;
    let dev = s.dev_sym_norm2(alpha);
    let constants_residual = [(0.0, -1.0 / nf), (0.5, (nf - 2.0) / (2.0 * nf)), (1.0, (nf - 1.0) / nf)]
        .iter()
        .map(|&(shift, rhs)| rel(c + shift - (ct + rhs), (c + shift).abs().max(1.0)))
        .fold(0.0, f64::max);
    let zero_trace_residuals = s.zero_trace.then(|| {
        [
            rel(dev - 0.5 * n.grad - (c + 0.5) * n.div, dev + 0.5 * n.grad + (c + 0.5).abs() * n.div),
            rel(dev - 0.5 * n.curl - (c + 1.0) * n.div, dev + 0.5 * n.curl + (c + 1.0).abs() * n.div),
            rel(dev - (2.0 * c + 1.0) * n.sym + c * n.grad, dev + (2.0 * c + 1.0).abs() * n.sym + c.abs() * n.grad),
            rel(dev - (c + 1.0) * n.sym + 0.5 * c * n.curl, dev + (c + 1.0).abs() * n.sym + 0.5 * c.abs() * n.curl),
        ]
    });
    DevIdentity {
        alpha,
        c_alpha: c,
        c_tilde: ct,
        dev,
        residual: rel(dev - n.sym - c * n.div, dev + n.sym + c.abs() * n.div),
        constants_residual,
        zero_trace_residuals,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimateStatus {
    Holds,
    Fails,
    /// α outside the range the estimate is stated for, or a zero-trace
    /// estimate on a field without zero trace.
    NotApplicable,
}

/// One inequality `lhs ≤ rhs` with relative margin `(rhs - lhs)/max(lhs, rhs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub id: &'static str,
    pub statement: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub status: EstimateStatus,
}

#[derive(Clone, Copy)]
enum AlphaRange {
    All,
    /// α ∉ (0, 2/N).
    OutsideOpen,
    /// α ∉ [0, 2/N].
    OutsideClosed,
    /// α ∈ [0, 2/N].
    InsideClosed,
}

impl AlphaRange {
    fn contains(self, alpha: f64) -> bool {
        let hi = 2.0 / DIM as f64;
        match self {
            AlphaRange::All => true,
            AlphaRange::OutsideOpen => alpha <= 0.0 || alpha >= hi,
            AlphaRange::OutsideClosed => alpha < 0.0 || alpha > hi,
            AlphaRange::InsideClosed => (0.0..=hi).contains(&alpha),
        }
    }
}

/// Evaluates every estimate implied by the two identities. The first five
/// hold for all fields, the rest need zero trace.
pub fn verify_estimate_suite(s: &Sampled, alpha: f64) -> Vec<Estimate> {
    let n = s.norms();
    let nf = DIM as f64;
    let c = c_alpha(alpha, DIM);
    let grad = n.grad.sqrt();
    let sym = n.sym.sqrt();
    let div = n.div.sqrt();
    let curl = n.curl.sqrt();
    let dev = s.dev_sym_norm2(alpha).sqrt();
    use AlphaRange::*;
    #[rustfmt::skip]
    let table: [(&str, &str, bool, AlphaRange, f64, f64); 14] = [
        ("E1", "‖div v‖ ≤ √N ‖∇v‖", false, All, div, nf.sqrt() * grad),
        ("E2", "‖sym ∇v‖ ≤ ‖∇v‖", false, All, sym, grad),
        ("E3", "‖sym ∇v‖ ≤ ‖dev_α sym ∇v‖, α ∉ I", false, OutsideOpen, sym, dev),
        ("E4", "‖div v‖ ≤ c_α^(-1/2) ‖dev_α sym ∇v‖, α ∉ Ī", false, OutsideClosed, div, dev / c.sqrt()),
        ("E5", "‖dev_α sym ∇v‖ ≤ ‖sym ∇v‖, α ∈ Ī", false, InsideClosed, dev, sym),
        ("E6", "‖curl v‖ ≤ ‖∇v‖", true, All, curl, grad),
        ("E7", "‖div v‖ ≤ ‖∇v‖", true, All, div, grad),
        ("E8", "‖div v‖ ≤ ‖sym ∇v‖", true, All, div, sym),
        ("E9", "‖div v‖ ≤ (N/(N-1))^(1/2) ‖dev_α sym ∇v‖", true, All, div, (nf / (nf - 1.0)).sqrt() * dev),
        ("E10", "‖∇v‖ ≤ √2 ‖sym ∇v‖", true, All, grad, 2f64.sqrt() * sym),
        ("E11", "‖∇v‖ ≤ √2 ‖dev_α sym ∇v‖", true, All, grad, 2f64.sqrt() * dev),
        ("E12", "‖dev_α sym ∇v‖ ≤ (c_α+1)^(1/2) ‖sym ∇v‖, α ∉ I", true, OutsideOpen, dev, (c + 1.0).sqrt() * sym),
        ("E13", "‖sym ∇v‖ ≤ (c_α+1)^(-1/2) ‖dev_α sym ∇v‖, α ∈ Ī", true, InsideClosed, sym, dev / (c + 1.0).sqrt()),
        ("E14", "‖dev_α sym ∇v‖ ≤ ‖∇v‖, α ∈ Ī", true, InsideClosed, dev, grad),
    ];
    table
        .iter()
        .map(|&(id, statement, needs_trace, range, lhs, rhs)| {
            if (needs_trace && !s.zero_trace) || !range.contains(alpha) {
                return Estimate {
                    id,
                    statement,
                    lhs: f64::NAN,
                    rhs: f64::NAN,
                    margin: f64::NAN,
                    status: EstimateStatus::NotApplicable,
                };
            }
            let scale = lhs.abs().max(rhs.abs());
            let margin = if scale > 0.0 { (rhs - lhs) / scale } else { 0.0 };
            let status = if margin >= -ESTIMATE_TOL { EstimateStatus::Holds } else { EstimateStatus::Fails };
            Estimate { id, statement, lhs, rhs, margin, status }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::PolyField;
    use super::*;
    use crate::poly::{curl, divergence, jacobian, Poly, PolyVec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_field() -> PolyField {
        PolyField::new([Poly::var(0), Poly::var(1), Poly::var(2)])
    }

    /// Squared norms by exact monomial moments, independent of the sampler.
    fn exact_norms(v: &PolyVec) -> (f64, f64, f64, f64) {
        let j = jacobian(v);
        let grad: f64 = j.iter().flatten().map(|p| (p * p).integrate_unit_cube()).sum();
        let mut sym = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let s = (&j[a][b] + &j[b][a]).scale(0.5);
                sym += (&s * &s).integrate_unit_cube();
            }
        }
        let d = divergence(v);
        let c = curl(v);
        let curl2: f64 = c.iter().map(|p| (p * p).integrate_unit_cube()).sum();
        (grad, sym, (&d * &d).integrate_unit_cube(), curl2)
    }

    #[test]
    fn constants_arithmetic() {
        assert!((c_alpha(1.0 / 3.0, 3) + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c_tilde_alpha(1.0 / 3.0, 3), 0.0);
        assert_eq!(c_alpha(0.0, 3), 0.0);
        assert!((c_alpha(0.7, 3) - 0.07).abs() < 1e-15);
        for n in 2..6 {
            for k in -10..10 {
                let a = k as f64 * 0.17;
                assert!((c_alpha(a, n) - (c_tilde_alpha(a, n) - 1.0 / n as f64)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn bubble_in_one_component() {
        let f = PolyField::with_bubble([Poly::constant(1.0), Poly::zero(), Poly::zero()]);
        let r = verify_symgrad_identity(&f.sample()).unwrap();
        assert!(r.residual_grad_div <= 1e-13 && r.residual_curl_div <= 1e-13);
    }

    #[test]
    fn rotated_bubble_matches_exact_moments() {
        let f = PolyField::with_bubble([Poly::var(1), Poly::var(2), Poly::var(0)]);
        let r = verify_symgrad_identity(&f.sample()).unwrap();
        assert!(r.residual_grad_div <= 1e-12 && r.residual_curl_div <= 1e-12);
        let (grad, sym, div, curl2) = exact_norms(f.components());
        // the exact moments satisfy the identity independently
        assert!((sym - 0.5 * (grad + div)).abs() <= 1e-12 * sym);
        assert!((sym - 0.5 * curl2 - div).abs() <= 1e-12 * sym);
        assert!((r.norms.sym - sym).abs() <= 1e-12 * sym);
    }

    #[test]
    fn field_without_zero_trace_is_refused() {
        let f = PolyField::new([Poly::var(0), Poly::zero(), Poly::zero()]);
        assert_eq!(verify_symgrad_identity(&f.sample()), Err(IdentityError::NoZeroTrace));
    }

    #[test]
    fn deviator_of_identity_gradient() {
        let s = identity_field().sample();
        let d = verify_dev_identity(&s, 1.0 / 3.0);
        assert!(d.dev.abs() < 1e-14);
        assert!(d.residual < 1e-14);
        assert!(d.zero_trace_residuals.is_none());
        let d0 = verify_dev_identity(&s, 0.0);
        assert_eq!(d0.c_alpha, 0.0);
        assert!((d0.dev - 3.0).abs() < 1e-13);
    }

    #[test]
    fn dev_identity_for_random_fields_and_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for k in 0..6 {
            let f = PolyField::random(4, k % 2 == 0, &mut rng);
            let s = f.sample();
            for a in [-2.0, -0.4, 0.0, 1.0 / 3.0, 0.7, 2.0] {
                let d = verify_dev_identity(&s, a);
                assert!(d.max_residual() <= 1e-12, "{d:?}");
                assert_eq!(d.zero_trace_residuals.is_some(), k % 2 == 0);
            }
        }
    }

    #[test]
    fn quadrature_order_does_not_matter_once_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = PolyField::random(3, true, &mut rng);
        let d = 2 * f.degree() as usize;
        let a = verify_symgrad_identity(&super::super::Sampled::new(&f, d)).unwrap();
        let b = verify_symgrad_identity(&super::super::Sampled::new(&f, 2 * d)).unwrap();
        assert!((a.residual_grad_div - b.residual_grad_div).abs() < 1e-14);
        assert!((a.residual_curl_div - b.residual_curl_div).abs() < 1e-14);
    }

    #[test]
    fn divergence_bound_is_sharp_for_identity_field() {
        let est = verify_estimate_suite(&identity_field().sample(), 0.5);
        let e1 = est.iter().find(|e| e.id == "E1").unwrap();
        assert!((e1.lhs - 3.0).abs() < 1e-13 && e1.margin.abs() < 1e-14);
        assert!(est
            .iter()
            .filter(|e| e.id >= "E6" && e.id.len() == 2)
            .all(|e| e.status == EstimateStatus::NotApplicable));
        assert!(est.iter().all(|e| e.status != EstimateStatus::Fails));
    }

    #[test]
    fn restricted_estimates_skip_outside_their_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = PolyField::random(3, true, &mut rng).sample();
        let est = verify_estimate_suite(&s, 1.0);
        let status = |id: &str| est.iter().find(|e| e.id == id).unwrap().status;
        for id in ["E5", "E13", "E14"] {
            assert_eq!(status(id), EstimateStatus::NotApplicable);
        }
        for id in ["E3", "E4", "E12"] {
            assert_eq!(status(id), EstimateStatus::Holds);
        }
        let inside = verify_estimate_suite(&s, 1.0 / 3.0);
        assert!(inside.iter().filter(|e| e.id == "E4").all(|e| e.status == EstimateStatus::NotApplicable));
    }

    #[test]
    fn deviatoric_korn_on_bubbles() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let s = PolyField::random(5, true, &mut rng).sample();
            for e in verify_estimate_suite(&s, 1.0 / 3.0) {
                assert_ne!(e.status, EstimateStatus::Fails, "{e:?}");
            }
        }
    }
}
