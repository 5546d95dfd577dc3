//! Link-by-link check of the main inequality for one tensor field, through
//! the mass-orthogonal split `T = R + S`.

use super::{constant_tensor_field, derived_bounds, ConstantsError, ConstantsOptions, CERTIFY_SLACK};
use super::{korn_constant_irrotational, maxwell_constant, KornMode};
use crate::fem::{assemble, Form, Mat3, MatrixCoefficient, TensorField};
use crate::hodge::{edge_tensor_means, piecewise_skew, project_so3, HodgeContext};
use crate::linalg::SparseMatrix;
use crate::mesh::{Mesh, TAG_T};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

/// One checked relation. Inequalities `lhs ≤ rhs` have margin
/// `(rhs - lhs) / max(lhs, rhs, ‖T‖)`; identities have `lhs` the relative
/// residual, `rhs = 0` and margin `-lhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Link {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

impl Link {
    fn inequality(name: &'static str, lhs: f64, rhs: f64, reference: f64) -> Link {
        let scale = lhs.abs().max(rhs.abs()).max(reference);
        let margin = if scale == 0.0 { 0.0 } else { (rhs - lhs) / scale };
        Link { name, lhs, rhs, margin, holds: margin >= -CERTIFY_SLACK }
    }

    fn identity(name: &'static str, residual: f64) -> Link {
        Link { name, lhs: residual, rhs: 0.0, margin: -residual, holds: residual <= CERTIFY_SLACK }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub links: Vec<Link>,
    pub verdict: bool,
    /// First link that failed.
    pub violated: Option<&'static str>,
}

impl Certificate {
    fn new(links: Vec<Link>) -> Certificate {
        let violated = links.iter().find(|l| !l.holds).map(|l| l.name);
        Certificate { verdict: violated.is_none(), violated, links }
    }

    pub fn min_margin(&self) -> f64 {
        self.links.iter().map(|l| l.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn link(&self, name: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.name == name)
    }
}

/// Uniform coefficients in `[-1, 1]`.
pub fn random_tensor_field(n: usize, rng: &mut impl Rng) -> TensorField {
    TensorField { rows: std::array::from_fn(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()) }
}

fn sub(a: &TensorField, b: &TensorField) -> TensorField {
    TensorField { rows: std::array::from_fn(|r| a.rows[r].iter().zip(&b.rows[r]).map(|(x, y)| x - y).collect()) }
}

fn frob(m: &Mat3) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// Constants entering the chain, all from the same mesh and tags.
#[derive(Debug, Clone, Copy)]
pub struct ChainConstants {
    pub c_k: f64,
    pub c_m: f64,
    pub c_coexact: f64,
    /// Per-slice Korn constant, for the piecewise skew variant when Γ_t = ∅.
    pub c_k_slices: Option<f64>,
}

/// Certifies `‖T - Ŝ‖ ≤ ĉ |||T|||` along the links of its proof:
/// orthogonality of the split, `Curl S = Curl T`, the Maxwell link
/// `‖S‖ ≤ c_coexact ‖Curl T‖`, the Korn link `‖R - Ŝ‖ ≤ c_k ‖sym R‖` and the
/// assembled bound. `Ŝ = 0` when Γ_t ≠ ∅; otherwise `Ŝ = S_T`, checked
/// against `S_R`. With several slices and `c_k_slices`, the piecewise skew
/// variant with `c̃` is checked as well.
pub fn certify_main_inequality(
    mesh: &Mesh,
    ctx: &HodgeContext,
    consts: &ChainConstants,
    t: &TensorField,
    opts: &ConstantsOptions,
) -> Result<Certificate, ConstantsError> {
    Certifier::new(mesh, ctx, *consts, opts)?.certify(t)
}

/// Reusable certifier holding the assembled symmetric-part form.
pub struct Certifier<'a> {
    mesh: &'a Mesh,
    ctx: &'a HodgeContext,
    consts: ChainConstants,
    sym: SparseMatrix,
}

impl<'a> Certifier<'a> {
    pub fn new(
        mesh: &'a Mesh,
        ctx: &'a HodgeContext,
        consts: ChainConstants,
        opts: &ConstantsOptions,
    ) -> Result<Certifier<'a>, ConstantsError> {
        let sym = assemble(mesh, Form::TensorSym, &ctx.edge, &ctx.edge, None, opts.quad_order)?;
        Ok(Certifier { mesh, ctx, consts, sym })
    }

    fn sym_norm(&self, t: &TensorField) -> f64 {
        self.sym.quad_form(&t.stacked()).max(0.0).sqrt()
    }

    fn norm(&self, t: &TensorField) -> f64 {
        self.ctx.tensor_norm2(t).max(0.0).sqrt()
    }

    /// `‖T - P‖` for `P` constant skew on each slice.
    fn distance_to_piecewise(&self, t: &TensorField, p: &[Mat3]) -> f64 {
        let mut cross = 0.0;
        let mut pp = 0.0;
        for (k, m) in edge_tensor_means(self.mesh, &self.ctx.edge, t).iter().enumerate() {
            let s = &p[self.mesh.slices()[k]];
            cross += (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| m[i][j] * s[i][j]).sum::<f64>();
            pp += self.mesh.volume(k) * frob(s).powi(2);
        }
        (self.ctx.tensor_norm2(t) - 2.0 * cross + pp).max(0.0).sqrt()
    }

    fn split_links(&self, t: &TensorField) -> Result<(TensorField, TensorField, Vec<Link>), ConstantsError> {
        let split = self.ctx.split_tensor(t)?;
        let (r, s) = (split.curl_free, split.coexact);
        // Relative to ‖T‖², so a roundoff-sized part does not inflate it.
        let nt2 = self.ctx.tensor_norm2(t);
        let orth = if nt2 == 0.0 { 0.0 } else { self.ctx.tensor_inner(&r, &s).abs() / nt2 };
        let ct = self.ctx.tensor_curl(t);
        let cs = self.ctx.tensor_curl(&s);
        let scale = ct.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = (0..3)
            .flat_map(|k| ct[k].iter().zip(&cs[k]).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
            .fold(0.0f64, f64::max);
        let curl_res = if scale > 0.0 { diff / scale } else { diff };
        let links = vec![Link::identity("orthogonality", orth), Link::identity("curl_preserved", curl_res)];
        Ok((r, s, links))
    }

    pub fn certify(&self, t: &TensorField) -> Result<Certificate, ConstantsError> {
        let c = &self.consts;
        let (c_hat, _) = derived_bounds(c.c_k, c.c_m)?;
        let (r, s, mut links) = self.split_links(t)?;
        let nt = self.norm(t);
        let curl_t = self.ctx.tensor_curl_norm2(t).max(0.0).sqrt();
        let sym_t = self.sym_norm(t);
        let triple = (sym_t * sym_t + curl_t * curl_t).sqrt();
        links.push(Link::inequality("maxwell", self.norm(&s), c.c_coexact * curl_t, nt));
        let free = !self.mesh.has_tag(TAG_T);
        let (r_hat, t_hat) = if free {
            let s_t = project_so3(self.mesh, &self.ctx.edge, t);
            let s_r = project_so3(self.mesh, &self.ctx.edge, &r);
            let diff: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| s_t[i][j] - s_r[i][j]));
            let scale = self.norm(t) / self.mesh.total_volume().sqrt();
            links.push(Link::identity("skew_means_agree", if scale > 0.0 { frob(&diff) / scale } else { 0.0 }));
            let hat = constant_tensor_field(self.mesh, &self.ctx.edge, &s_t);
            (sub(&r, &hat), sub(t, &hat))
        } else {
            (r.clone(), t.clone())
        };
        links.push(Link::inequality("korn", self.norm(&r_hat), c.c_k * self.sym_norm(&r), nt));
        links.push(Link::inequality("main", self.norm(&t_hat), c_hat * triple, nt));
        if let (true, Some(c_ks)) = (free && self.mesh.num_slices() > 1, c.c_k_slices) {
            let (_, c_tilde) = derived_bounds(c_ks, c.c_m)?;
            let p = piecewise_skew(self.mesh, &self.ctx.edge, &r);
            links.push(Link::inequality(
                "korn_slices",
                self.distance_to_piecewise(&r, &p),
                c_ks * self.sym_norm(&r),
                nt,
            ));
            links.push(Link::inequality("main_slices", self.distance_to_piecewise(t, &p), c_tilde * triple, nt));
        }
        Ok(Certificate::new(links))
    }
}

/// Computes the constants of the chain on `mesh` with its stored tags. The
/// per-slice Korn constant is included when `slices` is set, Γ_t = ∅ and the
/// mesh has several slices.
pub fn chain_constants(
    mesh: &Mesh,
    ctx: &HodgeContext,
    slices: bool,
    opts: &ConstantsOptions,
) -> Result<ChainConstants, ConstantsError> {
    let c_k = korn_constant_irrotational(mesh, ctx, KornMode::Global, opts)?.value;
    let mx = maxwell_constant(mesh, ctx, opts)?;
    let c_k_slices = if slices && !mesh.has_tag(TAG_T) && mesh.num_slices() > 1 {
        Some(korn_constant_irrotational(mesh, ctx, KornMode::PerSlice, opts)?.value)
    } else {
        None
    };
    Ok(ChainConstants { c_k, c_m: mx.record.value, c_coexact: mx.coexact.value, c_k_slices })
}

/// Certificates for a seeded sequence of random tensor fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationRun {
    pub certificates: Vec<Certificate>,
    /// Smallest margin per link over all samples.
    pub margins: BTreeMap<String, f64>,
    pub all_hold: bool,
}

pub fn run_certification(
    mesh: &Mesh,
    ctx: &HodgeContext,
    consts: ChainConstants,
    samples: usize,
    seed: u64,
    opts: &ConstantsOptions,
) -> Result<CertificationRun, ConstantsError> {
    let cert = Certifier::new(mesh, ctx, consts, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run =
        CertificationRun { certificates: Vec::with_capacity(samples), margins: BTreeMap::new(), all_hold: true };
    for _ in 0..samples {
        let t = random_tensor_field(ctx.edge.num_free(), &mut rng);
        let c = cert.certify(&t)?;
        run.all_hold &= c.verdict;
        for l in &c.links {
            let m = run.margins.entry(l.name.to_string()).or_insert(f64::INFINITY);
            *m = m.min(l.margin);
        }
        run.certificates.push(c);
    }
    Ok(run)
}

/// Weighted variant: Korn link with `sym(R F)`, the coefficient link
/// `‖sym(S F)‖ ≤ c_F ‖S‖`, and `‖T‖ ≤ ĉ_F |||T|||_F`. Requires Γ_t ≠ ∅.
#[allow(clippy::too_many_arguments)]
pub fn certify_weighted(
    mesh: &Mesh,
    ctx: &HodgeContext,
    consts: &ChainConstants,
    c_k_f: f64,
    c_f: f64,
    f: &MatrixCoefficient,
    t: &TensorField,
    opts: &ConstantsOptions,
) -> Result<Certificate, ConstantsError> {
    if !mesh.has_tag(TAG_T) {
        return Err(ConstantsError::Unsupported("weighted certification needs a nonempty Γ_t".into()));
    }
    let q = super::weighted_quad_order(f, opts.quad_order);
    let symf = assemble(mesh, Form::TensorSymF, &ctx.edge, &ctx.edge, Some(f), q)?;
    let base = Certifier::new(mesh, ctx, *consts, opts)?;
    let c_hat_f = super::derived_bound_weighted(c_k_f, consts.c_m, c_f)?;
    let (r, s, mut links) = base.split_links(t)?;
    let symf_norm = |x: &TensorField| symf.quad_form(&x.stacked()).max(0.0).sqrt();
    let nt = base.norm(t);
    let curl_t = ctx.tensor_curl_norm2(t).max(0.0).sqrt();
    let triple = (symf_norm(t).powi(2) + curl_t * curl_t).sqrt();
    links.push(Link::inequality("maxwell", base.norm(&s), consts.c_coexact * curl_t, nt));
    links.push(Link::inequality("korn_F", base.norm(&r), c_k_f * symf_norm(&r), nt));
    links.push(Link::inequality("coefficient", symf_norm(&s), c_f * base.norm(&s), nt));
    links.push(Link::inequality("main_F", base.norm(t), c_hat_f * triple, nt));
    Ok(Certificate::new(links))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::evaluate_tensor_norms;
    use crate::fem::NormKind;
    use crate::linalg::EigOptions;
    use crate::mesh::{generate_primitive, Primitive};

    fn chain(m: &Mesh, ctx: &HodgeContext) -> ChainConstants {
        let o = ConstantsOptions::default();
        let c_k = korn_constant_irrotational(m, ctx, KornMode::Global, &o).unwrap().value;
        let mx = maxwell_constant(m, ctx, &o).unwrap();
        ChainConstants { c_k, c_m: mx.record.value, c_coexact: mx.coexact.value, c_k_slices: None }
    }

    #[test]
    fn zero_field_certifies_trivially() {
        let m = generate_primitive(Primitive::SlabMixed, 1);
        let ctx = HodgeContext::new(&m, Some(TAG_T), &EigOptions::default()).unwrap();
        let t = TensorField::zeros(ctx.edge.num_free());
        let c = certify_main_inequality(&m, &ctx, &chain(&m, &ctx), &t, &ConstantsOptions::default()).unwrap();
        assert!(c.verdict);
        assert!(c.links.iter().all(|l| l.margin == 0.0));
    }

    #[test]
    fn random_fields_certify_with_independent_norms() {
        let m = generate_primitive(Primitive::SlabMixed, 2);
        let ctx = HodgeContext::new(&m, Some(TAG_T), &EigOptions::default()).unwrap();
        let consts = chain(&m, &ctx);
        let opts = ConstantsOptions::default();
        let cert = Certifier::new(&m, &ctx, consts, &opts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let t = random_tensor_field(ctx.edge.num_free(), &mut rng);
            let c = cert.certify(&t).unwrap();
            assert!(c.verdict, "{c:?}");
            // recompute the main link from quadrature norms
            let n =
                evaluate_tensor_norms(&m, &ctx.edge, &t, &[NormKind::L2, NormKind::Sym, NormKind::Curl], 4).unwrap();
            let (c_hat, _) = derived_bounds(consts.c_k, consts.c_m).unwrap();
            let main = c.link("main").unwrap();
            assert!((main.lhs - n[0].sqrt()).abs() < 1e-10 * main.lhs);
            assert!(n[0].sqrt() <= c_hat * (n[1] + n[2]).sqrt());
        }
    }

    #[test]
    fn gradient_rows_have_no_coexact_part() {
        let m = generate_primitive(Primitive::SlabMixed, 1);
        let ctx = HodgeContext::new(&m, Some(TAG_T), &EigOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = TensorField {
            rows: std::array::from_fn(|_| {
                let u: Vec<f64> = (0..ctx.p1.num_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
                ctx.grad.mul_vec(&u)
            }),
        };
        let c = certify_main_inequality(&m, &ctx, &chain(&m, &ctx), &t, &ConstantsOptions::default()).unwrap();
        assert!(c.verdict, "{c:?}");
        assert!(c.link("maxwell").unwrap().lhs < 1e-12);
    }
}
