//! Each optimal constant as `1/√λ_min` of a symmetric definite pencil.

use super::{
    constant_tensor_field, matrix_coefficient_norm, so3_basis, weighted_quad_order, ConstantRecord, ConstantsError,
    ConstantsOptions, KERNEL_REL_TOL,
};
use crate::fem::{assemble, build_space, Bc, DofSpace, Family, Form, MatrixCoefficient, TetGeom};
use crate::hodge::HodgeContext;
use crate::linalg::{eig_smallest, eig_smallest_dense, Deflation, EigenResult, SparseMatrix};
use crate::mesh::{Mesh, TAG_T};
use nalgebra::DMatrix;

fn kernel_threshold(a: &SparseMatrix, b: &SparseMatrix) -> f64 {
    let (ta, tb) = (a.trace(), b.trace());
    if tb > 0.0 {
        KERNEL_REL_TOL * ta / tb
    } else {
        0.0
    }
}

/// Smallest eigenpairs; an eigenvalue at kernel level is an error.
fn solve_pencil(
    name: &str,
    a: &SparseMatrix,
    b: &SparseMatrix,
    deflation: Deflation<'_>,
    opts: &ConstantsOptions,
) -> Result<(ConstantRecord, EigenResult), ConstantsError> {
    let r = eig_smallest(a, b, 1, deflation, &opts.eig)?;
    check_kernel(name, &r, kernel_threshold(a, b))?;
    Ok((ConstantRecord::from_result(name, &r), r))
}

fn check_kernel(name: &str, r: &EigenResult, thresh: f64) -> Result<(), ConstantsError> {
    let dim = r.values.iter().take_while(|&&v| v <= thresh).count();
    if dim > 0 {
        return Err(ConstantsError::Kernel { name: name.into(), eigenvalue: r.values[0], dim });
    }
    Ok(())
}

fn gamma_t_empty(mesh: &Mesh) -> bool {
    !mesh.has_tag(TAG_T)
}

/// `c_p` over P1 with zero trace on Γ_t; constants are deflated when Γ_t = ∅.
pub fn poincare_constant(mesh: &Mesh, opts: &ConstantsOptions) -> Result<ConstantRecord, ConstantsError> {
    let s = build_space(mesh, Family::P1Scalar, Bc::gamma_t(mesh))?;
    let n = s.num_free();
    if n == 0 {
        return Ok(ConstantRecord::empty("c_p"));
    }
    let a = assemble(mesh, Form::Grad, &s, &s, None, opts.quad_order)?;
    let b = assemble(mesh, Form::Mass, &s, &s, None, opts.quad_order)?;
    let ones = DMatrix::from_element(n, 1, 1.0);
    let defl = if gamma_t_empty(mesh) { Deflation::BOrthogonal(&ones) } else { Deflation::None };
    Ok(solve_pencil("c_p", &a, &b, defl, opts)?.0)
}

/// Standard Korn constant and, when Γ_t = ∅, the kernel dimension of the
/// symmetric gradient on P1 vector fields.
#[derive(Debug, Clone)]
pub struct StandardKorn {
    pub record: ConstantRecord,
    /// Rigid motions give 6; anything more is reported in the record note.
    pub sym_kernel_dim: Option<usize>,
}

/// `c_k,s` over P1 vector fields with zero trace on Γ_t.
///
/// For Γ_t = ∅ one vertex is pinned (quotienting translations, the kernel of
/// the right form) and the rotations about it are deflated; further kernel
/// eigenvalues are counted and skipped.
pub fn korn_constant_standard(mesh: &Mesh, opts: &ConstantsOptions) -> Result<StandardKorn, ConstantsError> {
    let name = "c_k_s";
    let free = gamma_t_empty(mesh);
    let mut s = build_space(mesh, Family::P1Vector, Bc::gamma_t(mesh))?;
    let nv = mesh.num_vertices();
    if free && nv > 0 {
        s = s.pinned(&[0, nv, 2 * nv]);
    }
    if s.num_free() == 0 {
        return Ok(StandardKorn { record: ConstantRecord::empty(name), sym_kernel_dim: None });
    }
    let a = assemble(mesh, Form::SymGrad, &s, &s, None, opts.quad_order)?;
    let b = assemble(mesh, Form::Grad, &s, &s, None, opts.quad_order)?;
    if !free {
        let (record, _) = solve_pencil(name, &a, &b, Deflation::None, opts)?;
        return Ok(StandardKorn { record, sym_kernel_dim: None });
    }
    let x = mesh.vertices();
    let mut rot = DMatrix::zeros(s.num_free(), 3);
    for (k, e) in so3_basis().iter().enumerate() {
        let full: Vec<f64> = (0..3)
            .flat_map(|c| x.iter().map(move |p| (0..3).map(|j| e[c][j] * (p[j] - x[0][j])).sum::<f64>()))
            .collect();
        rot.column_mut(k).copy_from_slice(&s.restrict(&full));
    }
    let thresh = kernel_threshold(&a, &b);
    let mut k = 4;
    loop {
        let r = eig_smallest(&a, &b, k, Deflation::BOrthogonal(&rot), &opts.eig)?;
        let extra = r.values.iter().take_while(|&&v| v <= thresh).count();
        if extra < r.len() || r.len() < k {
            let mut record = match r.values.get(extra) {
                Some(&lam) => ConstantRecord::from_eigenvalue(name, lam, r.residuals[extra], r.search_dim - extra),
                None => ConstantRecord::empty(name),
            };
            let dim = 6 + extra;
            if extra > 0 {
                record.note = Some(format!("sym-gradient kernel dimension {dim} exceeds the 6 rigid motions"));
            }
            return Ok(StandardKorn { record, sym_kernel_dim: Some(dim) });
        }
        k *= 2;
    }
}

/// `c_k,t` over P1 vector fields constant on each connected component of
/// Γ_t, modulo the global translations.
pub fn korn_constant_tangential(mesh: &Mesh, opts: &ConstantsOptions) -> Result<ConstantRecord, ConstantsError> {
    if gamma_t_empty(mesh) {
        return Err(ConstantsError::Unsupported("tangential Korn constant needs a nonempty Γ_t".into()));
    }
    let bc = Bc { essential: Some(TAG_T), component_constant: true };
    let s = build_space(mesh, Family::P1Vector, bc)?;
    let n = s.num_free();
    let nv = mesh.num_vertices();
    let mut c = DMatrix::zeros(n, 3);
    for k in 0..3 {
        let mut full = vec![0.0; 3 * nv];
        full[k * nv..(k + 1) * nv].fill(1.0);
        c.column_mut(k).copy_from_slice(&s.restrict(&full));
    }
    let a = assemble(mesh, Form::SymGrad, &s, &s, None, opts.quad_order)?;
    let b = assemble(mesh, Form::Grad, &s, &s, None, opts.quad_order)?;
    Ok(solve_pencil("c_k_t", &a, &b, Deflation::Constraints(&c), opts)?.0)
}

/// How constant skew tensors are removed when Γ_t = ∅.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KornMode {
    /// Quotient the global so(3): `‖T‖ ≤ c_k ‖sym T‖` on `so(3)^⊥`.
    Global,
    /// Subtract the per-slice skew mean: `‖T - S‖ ≤ c_k ‖sym T‖` with `S`
    /// the piecewise-constant skew projection.
    PerSlice,
}

/// Curl-free edge tensors parametrized as `Φ = diag(G | H)` per row, with
/// `G` the discrete gradient and `H` the harmonic basis.
struct CurlFree {
    phi: SparseMatrix,
    per_row: usize,
}

impl CurlFree {
    fn new(ctx: &HodgeContext) -> CurlFree {
        let h = &ctx.harmonic.fields;
        let row = if h.ncols() == 0 {
            ctx.grad.clone()
        } else {
            let hs = SparseMatrix::from_dense(h);
            SparseMatrix::block(&[vec![Some(&ctx.grad), Some(&hs)]])
        };
        CurlFree { per_row: row.ncols(), phi: row.block_diag(3) }
    }

    fn reduce(&self, m: &SparseMatrix) -> SparseMatrix {
        self.phi.transpose().matmul(m).matmul(&self.phi).symmetrized()
    }

    /// so(3) in reduced coordinates: rows are gradients of `E (x - x_0)`.
    fn so3(&self, mesh: &Mesh, p1: &DofSpace) -> DMatrix<f64> {
        let x = mesh.vertices();
        let mut y = DMatrix::zeros(3 * self.per_row, 3);
        for (k, e) in so3_basis().iter().enumerate() {
            for r in 0..3 {
                let full: Vec<f64> = x.iter().map(|p| (0..3).map(|j| e[r][j] * (p[j] - x[0][j])).sum()).collect();
                for (i, v) in p1.restrict(&full).into_iter().enumerate() {
                    y[(r * self.per_row + i, k)] = v;
                }
            }
        }
        y
    }
}

/// `∫_{Ω_j} w_e` for every slice `j` and free edge `e`.
fn slice_edge_moments(mesh: &Mesh, edge: &DofSpace) -> Vec<Vec<[f64; 3]>> {
    let mut out = vec![vec![[0.0; 3]; edge.num_free()]; mesh.num_slices()];
    for k in 0..mesh.num_tets() {
        let g = TetGeom::new(mesh, k);
        let j = mesh.slices()[k];
        for (e, &ge) in mesh.tet_edges(k).iter().enumerate() {
            let Some(f) = edge.free_index(ge) else { continue };
            let (a, b) = g.edge_pair(e);
            for d in 0..3 {
                out[j][f][d] += g.vol / 4.0 * (g.grads[b][d] - g.grads[a][d]);
            }
        }
    }
    out
}

/// `c_k` over the curl-free edge tensors with zero tangential trace on Γ_t.
pub fn korn_constant_irrotational(
    mesh: &Mesh,
    ctx: &HodgeContext,
    mode: KornMode,
    opts: &ConstantsOptions,
) -> Result<ConstantRecord, ConstantsError> {
    let name = match mode {
        KornMode::Global => "c_k_irrot",
        KornMode::PerSlice => "c_k_irrot_slices",
    };
    let cf = CurlFree::new(ctx);
    if cf.per_row == 0 {
        return Ok(ConstantRecord::empty(name));
    }
    let sym = assemble(mesh, Form::TensorSym, &ctx.edge, &ctx.edge, None, opts.quad_order)?;
    let tm = assemble(mesh, Form::TensorMass, &ctx.edge, &ctx.edge, None, opts.quad_order)?;
    let a = cf.reduce(&sym);
    let b = cf.reduce(&tm);
    if !gamma_t_empty(mesh) {
        return Ok(solve_pencil(name, &a, &b, Deflation::None, opts)?.0);
    }
    let y = cf.so3(mesh, &ctx.p1);
    match mode {
        KornMode::Global => Ok(solve_pencil(name, &a, &b, Deflation::BOrthogonal(&y), opts)?.0),
        KornMode::PerSlice => {
            // ‖T - ΠT‖² = ‖T‖² - Σ_{j,k} ⟨T, E_k 1_j⟩² / |Ω_j|
            let ne = ctx.edge.num_free();
            let moments = slice_edge_moments(mesh, &ctx.edge);
            let mut vols = vec![0.0; mesh.num_slices()];
            for k in 0..mesh.num_tets() {
                vols[mesh.slices()[k]] += mesh.volume(k);
            }
            let basis = so3_basis();
            let mut m = DMatrix::zeros(3 * ne, moments.len() * 3);
            for (j, mom) in moments.iter().enumerate() {
                let s = 1.0 / vols[j].sqrt();
                for (k, e) in basis.iter().enumerate() {
                    for r in 0..3 {
                        for (f, v) in mom.iter().enumerate() {
                            m[(r * ne + f, 3 * j + k)] = s * (0..3).map(|d| v[d] * e[r][d]).sum::<f64>();
                        }
                    }
                }
            }
            let w = cf.phi.transpose().mul_dense(&m);
            let bp = b.to_dense() - &w * w.transpose();
            let bp = (&bp + bp.transpose()) * 0.5;
            let r = eig_smallest_dense(&a.to_dense(), &bp, 1, Some(&y))?;
            check_kernel(name, &r, kernel_threshold(&a, &b))?;
            Ok(ConstantRecord::from_result(name, &r))
        }
    }
}

/// Maxwell constant with its gradient and coexact blocks.
#[derive(Debug, Clone)]
pub struct MaxwellConstant {
    pub grad: ConstantRecord,
    pub coexact: ConstantRecord,
    /// `c_m = max(c_grad, c_coexact)`.
    pub record: ConstantRecord,
}

/// `c_m` on edge fields with zero tangential trace on Γ_t. The coexact block
/// is the curl-curl pencil on the mass-orthogonal complement of gradients and
/// harmonic fields; the gradient block is the scalar Poincaré constant.
pub fn maxwell_constant(
    mesh: &Mesh,
    ctx: &HodgeContext,
    opts: &ConstantsOptions,
) -> Result<MaxwellConstant, ConstantsError> {
    let grad = poincare_constant(mesh, opts)?.renamed("c_m_grad");
    let coexact = if ctx.edge.num_free() == 0 {
        ConstantRecord::empty("c_m_coexact")
    } else {
        let g = ctx.grad.to_dense();
        let h = &ctx.harmonic.fields;
        let mut y = DMatrix::zeros(g.nrows(), g.ncols() + h.ncols());
        y.columns_mut(0, g.ncols()).copy_from(&g);
        if h.ncols() > 0 {
            y.columns_mut(g.ncols(), h.ncols()).copy_from(h);
        }
        solve_pencil("c_m_coexact", &ctx.curl_curl, &ctx.mass, Deflation::BOrthogonal(&y), opts)?.0
    };
    let record = if grad.value >= coexact.value { grad.renamed("c_m") } else { coexact.renamed("c_m") };
    Ok(MaxwellConstant { grad, coexact, record })
}

/// `c_direct` over all edge tensors with zero tangential trace on Γ_t
/// (modulo so(3) when Γ_t = ∅), with the H(Curl) equivalence constant
/// `(1 + c_direct²)^{1/2}` from the same eigenvalue.
pub fn direct_main_constant(
    mesh: &Mesh,
    ctx: &HodgeContext,
    opts: &ConstantsOptions,
) -> Result<(ConstantRecord, f64), ConstantsError> {
    let name = "c_direct";
    let e = &ctx.edge;
    if e.num_free() == 0 {
        return Ok((ConstantRecord::empty(name), 1.0));
    }
    let sym = assemble(mesh, Form::TensorSym, e, e, None, opts.quad_order)?;
    let cc = assemble(mesh, Form::TensorCurlCurl, e, e, None, opts.quad_order)?;
    let a = sym.add_scaled(&cc, 1.0);
    let b = assemble(mesh, Form::TensorMass, e, e, None, opts.quad_order)?;
    let y = if gamma_t_empty(mesh) {
        let n = 3 * e.num_free();
        let mut y = DMatrix::zeros(n, 3);
        for (k, s) in so3_basis().iter().enumerate() {
            y.column_mut(k).copy_from_slice(&constant_tensor_field(mesh, e, s).stacked());
        }
        Some(y)
    } else {
        None
    };
    let defl = y.as_ref().map_or(Deflation::None, Deflation::BOrthogonal);
    let r = eig_smallest(&a, &b, 4, defl, &opts.eig)?;
    check_kernel(name, &r, kernel_threshold(&a, &b))?;
    let rec = ConstantRecord::from_result(name, &r);
    let eq = (1.0 + rec.value * rec.value).sqrt();
    Ok((rec, eq))
}

/// Weighted irrotational Korn constant with the coefficient bounds.
#[derive(Debug, Clone)]
pub struct WeightedKorn {
    pub record: ConstantRecord,
    pub c_f: f64,
    pub mu_observed: f64,
    /// Quadrature order of the weighted form and of `c_F`.
    pub quad_order: usize,
}

/// `c_k,F` with left form `⟨sym(T F), sym(S F)⟩` over the curl-free edge
/// tensors; requires Γ_t ≠ ∅.
pub fn korn_constant_weighted(
    mesh: &Mesh,
    ctx: &HodgeContext,
    f: &MatrixCoefficient,
    opts: &ConstantsOptions,
) -> Result<WeightedKorn, ConstantsError> {
    if gamma_t_empty(mesh) {
        return Err(ConstantsError::Unsupported("weighted Korn constant needs a nonempty Γ_t".into()));
    }
    let q = weighted_quad_order(f, opts.quad_order);
    let (c_f, mu_observed) = matrix_coefficient_norm(mesh, f, q)?;
    let cf = CurlFree::new(ctx);
    if cf.per_row == 0 {
        return Ok(WeightedKorn { record: ConstantRecord::empty("c_k_F"), c_f, mu_observed, quad_order: q });
    }
    let symf = assemble(mesh, Form::TensorSymF, &ctx.edge, &ctx.edge, Some(f), q)?;
    let tm = assemble(mesh, Form::TensorMass, &ctx.edge, &ctx.edge, None, opts.quad_order)?;
    let (record, _) = solve_pencil("c_k_F", &cf.reduce(&symf), &cf.reduce(&tm), Deflation::None, opts)?;
    Ok(WeightedKorn { record, c_f, mu_observed, quad_order: q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::EigOptions;
    use crate::mesh::{generate_primitive, Primitive, TagSelector};

    fn opts() -> ConstantsOptions {
        ConstantsOptions::default()
    }

    fn ctx(m: &Mesh) -> HodgeContext {
        HodgeContext::new(m, Some(TAG_T), &EigOptions::default()).unwrap()
    }

    #[test]
    fn poincare_below_continuum_limits() {
        let m = generate_primitive(Primitive::UnitCube, 2);
        let c = poincare_constant(&m, &opts()).unwrap();
        assert!(c.value > 0.0 && c.value < 1.0 / (std::f64::consts::PI * 3f64.sqrt()));
        let free = TagSelector::None.apply(&m).unwrap();
        let c = poincare_constant(&free, &opts()).unwrap();
        assert!(c.value > 0.0 && c.value < 1.0 / std::f64::consts::PI);
    }

    #[test]
    fn one_cell_dirichlet_space_is_empty() {
        let m = generate_primitive(Primitive::UnitCube, 1);
        let r = poincare_constant(&m, &opts()).unwrap();
        assert!(r.is_empty() && r.value == 0.0 && r.note.is_some());
        assert!(korn_constant_standard(&m, &opts()).unwrap().record.is_empty());
    }

    #[test]
    fn korn_chain_on_slab() {
        let m = generate_primitive(Primitive::SlabMixed, 2);
        let c = ctx(&m);
        let ks = korn_constant_standard(&m, &opts()).unwrap().record.value;
        let kt = korn_constant_tangential(&m, &opts()).unwrap().value;
        let k = korn_constant_irrotational(&m, &c, KornMode::Global, &opts()).unwrap().value;
        assert!(ks <= kt * (1.0 + 1e-10), "{ks} {kt}");
        assert!(kt <= k * (1.0 + 1e-10), "{kt} {k}");
        assert!(k >= 1.0);
    }

    #[test]
    fn free_korn_kernel_is_rigid_motions() {
        let m = TagSelector::None.apply(&generate_primitive(Primitive::UnitCube, 2)).unwrap();
        let r = korn_constant_standard(&m, &opts()).unwrap();
        assert_eq!(r.sym_kernel_dim, Some(6));
        assert!(r.record.value.is_finite() && r.record.note.is_none());
        assert!(korn_constant_tangential(&m, &opts()).is_err());
    }

    #[test]
    fn per_slice_constant_is_at_most_global() {
        let m = TagSelector::None.apply(&generate_primitive(Primitive::CubeWithTunnel, 1)).unwrap();
        let c = ctx(&m);
        assert_eq!(c.harmonic.dim(), 1);
        let g = korn_constant_irrotational(&m, &c, KornMode::Global, &opts()).unwrap().value;
        let s = korn_constant_irrotational(&m, &c, KornMode::PerSlice, &opts()).unwrap().value;
        assert!(s <= g * (1.0 + 1e-10), "{s} {g}");
    }

    #[test]
    fn direct_constant_needs_so3_deflation() {
        let m = TagSelector::None.apply(&generate_primitive(Primitive::UnitCube, 1)).unwrap();
        let c = ctx(&m);
        let (rec, eq) = direct_main_constant(&m, &c, &opts()).unwrap();
        assert!(rec.value.is_finite() && eq > 1.0);
        // without deflation the constant skew tensors form a kernel
        let e = &c.edge;
        let a = assemble(&m, Form::TensorSym, e, e, None, 4)
            .unwrap()
            .add_scaled(&assemble(&m, Form::TensorCurlCurl, e, e, None, 4).unwrap(), 1.0);
        let b = assemble(&m, Form::TensorMass, e, e, None, 4).unwrap();
        let r = eig_smallest(&a, &b, 4, Deflation::None, &EigOptions::default()).unwrap();
        let k = check_kernel("c_direct", &r, kernel_threshold(&a, &b));
        assert!(matches!(k, Err(ConstantsError::Kernel { dim: 3, .. })), "{k:?}");
    }

    #[test]
    fn weighted_constant_scales() {
        let m = generate_primitive(Primitive::SlabMixed, 1);
        let c = ctx(&m);
        let k = korn_constant_irrotational(&m, &c, KornMode::Global, &opts()).unwrap().value;
        let id = korn_constant_weighted(&m, &c, &MatrixCoefficient::identity(), &opts()).unwrap();
        assert!((id.record.value - k).abs() <= 1e-10 * k);
        let two = korn_constant_weighted(&m, &c, &MatrixCoefficient::scaled_identity(2.0), &opts()).unwrap();
        assert!((two.record.value - k / 2.0).abs() <= 1e-10 * k);
        assert_eq!(two.c_f, 2.0);
    }
}
