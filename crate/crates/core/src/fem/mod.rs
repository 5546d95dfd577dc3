//! Lowest-order Whitney spaces (P1, edge, face, P0) with boundary
//! constraints, and assembly of the bilinear forms of the inequalities.

mod assemble;
mod coefficient;
mod element;
mod interpolate;
mod norms;

pub use assemble::{assemble, Form, DEFAULT_QUAD_ORDER};
pub use coefficient::{spectral_norm, Mat3, MatrixCoefficient};
pub use element::TetGeom;
pub use interpolate::{interpolate, interpolate_tensor, AnalyticField};
pub use norms::{evaluate_norms, evaluate_norms_poly, evaluate_tensor_norms, NormKind};

use crate::linalg::LinalgError;
use crate::mesh::{boundary_components, Mesh, TAG_T};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    P1Scalar,
    P1Vector,
    /// Lowest-order Nédélec edge elements; dof = tangential moment.
    Edge0,
    /// Lowest-order Raviart-Thomas face elements; dof = flux.
    Face0,
    P0Scalar,
}

/// Boundary conditions of a space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Bc {
    /// Boundary tag on which the family's trace vanishes: the value for P1,
    /// the tangential trace for Edge0, the normal trace for Face0.
    pub essential: Option<u8>,
    /// P1 vector fields only: instead of vanishing, the field is constant on
    /// each connected component of the `essential` boundary part.
    pub component_constant: bool,
}

impl Bc {
    pub fn free() -> Bc {
        Bc::default()
    }

    pub fn on(tag: u8) -> Bc {
        Bc { essential: Some(tag), component_constant: false }
    }

    /// Vanishing trace on Γ_t if the mesh has Γ_t triangles, free otherwise.
    pub fn gamma_t(mesh: &Mesh) -> Bc {
        if mesh.has_tag(TAG_T) {
            Bc::on(TAG_T)
        } else {
            Bc::free()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FemError {
    #[error("incompatible boundary condition: {0}")]
    IncompatibleBc(String),
    #[error("field violates the boundary condition at dof {dof}: value {value:e}")]
    BoundaryConditionViolated { dof: usize, value: f64 },
    #[error("quadrature order {given} below the required degree {needed}")]
    InsufficientQuadrature { needed: usize, given: usize },
    #[error("norm {norm} is undefined for {family:?} fields")]
    UndefinedNorm { norm: String, family: Family },
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("det F = {value:e} is not positive")]
    NonPositiveDeterminant { value: f64 },
    #[error("det F = {observed:e} falls below the declared bound {mu:e}")]
    DeterminantBelowBound { observed: f64, mu: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A discrete space with its map from full dofs to free unknowns.
///
/// Eliminated dofs map to `None`. Dofs in an equality group share one free
/// index. Free indices are numbered in order of first full dof.
#[derive(Debug, Clone, PartialEq)]
pub struct DofSpace {
    family: Family,
    bc: Bc,
    num_vertices: usize,
    free_of: Vec<Option<usize>>,
    num_free: usize,
    /// first full dof of each free index
    representative: Vec<usize>,
    num_groups: usize,
}

impl DofSpace {
    pub fn new(mesh: &Mesh, family: Family, bc: Bc) -> Result<DofSpace, FemError> {
        if bc.component_constant && family != Family::P1Vector {
            return Err(FemError::IncompatibleBc(format!("component-constant constraint on {family:?}")));
        }
        if bc.component_constant && bc.essential.is_none() {
            return Err(FemError::IncompatibleBc("component-constant constraint needs a boundary tag".into()));
        }
        if family == Family::P0Scalar && bc.essential.is_some() {
            return Err(FemError::IncompatibleBc("P0 carries no trace".into()));
        }
        let nv = mesh.num_vertices();
        let n_full = match family {
            Family::P1Scalar => nv,
            Family::P1Vector => 3 * nv,
            Family::Edge0 => mesh.num_edges(),
            Family::Face0 => mesh.num_faces(),
            Family::P0Scalar => mesh.num_tets(),
        };
        let mut eliminated = vec![false; n_full];
        let mut group_of: Vec<Option<usize>> = vec![None; n_full];
        let mut num_groups = 0;
        if let Some(tag) = bc.essential {
            match family {
                Family::P1Scalar => eliminated = mesh.tagged_vertices(tag),
                Family::P1Vector if bc.component_constant => {
                    let comps = boundary_components(mesh, tag);
                    for (&v, &c) in &comps.component_of {
                        for k in 0..3 {
                            group_of[k * nv + v] = Some(3 * c + k);
                        }
                    }
                    num_groups = 3 * comps.count;
                }
                Family::P1Vector => {
                    let on = mesh.tagged_vertices(tag);
                    for k in 0..3 {
                        eliminated[k * nv..(k + 1) * nv].copy_from_slice(&on);
                    }
                }
                Family::Edge0 => eliminated = mesh.tagged_edges(tag),
                Family::Face0 => eliminated = mesh.tagged_faces(tag),
                Family::P0Scalar => unreachable!(),
            }
        }
        Ok(Self::number(family, bc, nv, &eliminated, &group_of, num_groups))
    }

    fn number(
        family: Family,
        bc: Bc,
        num_vertices: usize,
        eliminated: &[bool],
        group_of: &[Option<usize>],
        num_groups: usize,
    ) -> DofSpace {
        let mut free_of = vec![None; eliminated.len()];
        let mut group_index: Vec<Option<usize>> = vec![None; num_groups];
        let mut representative = Vec::new();
        for d in 0..eliminated.len() {
            if eliminated[d] {
                continue;
            }
            let idx = match group_of[d] {
                Some(g) => *group_index[g].get_or_insert_with(|| {
                    representative.push(d);
                    representative.len() - 1
                }),
                None => {
                    representative.push(d);
                    representative.len() - 1
                }
            };
            free_of[d] = Some(idx);
        }
        DofSpace { family, bc, num_vertices, num_free: representative.len(), free_of, representative, num_groups }
    }

    /// Additionally eliminates the given full dofs (e.g. to pin a vertex).
    pub fn pinned(&self, full: &[usize]) -> DofSpace {
        let mut eliminated: Vec<bool> = self.free_of.iter().map(Option::is_none).collect();
        // regroup: full dofs sharing a free index keep sharing it
        let group_of: Vec<Option<usize>> = self.free_of.clone();
        for &d in full {
            if let Some(f) = self.free_of[d] {
                for (e, g) in self.free_of.iter().enumerate() {
                    if *g == Some(f) {
                        eliminated[e] = true;
                    }
                }
            }
        }
        let mut out = Self::number(self.family, self.bc, self.num_vertices, &eliminated, &group_of, self.num_free);
        out.num_groups = self.num_groups;
        out
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn bc(&self) -> Bc {
        self.bc
    }

    pub fn num_full(&self) -> usize {
        self.free_of.len()
    }

    pub fn num_free(&self) -> usize {
        self.num_free
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn free_index(&self, full: usize) -> Option<usize> {
        self.free_of[full]
    }

    pub fn free_map(&self) -> &[Option<usize>] {
        &self.free_of
    }

    /// For P1 vector spaces: vertex count, so full dof `k * nv + v` is component `k` at vertex `v`.
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Full coefficient vector; eliminated dofs are zero.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.num_free);
        self.free_of.iter().map(|f| f.map_or(0.0, |i| free[i])).collect()
    }

    /// Free coefficients from full ones (group value taken from its first dof).
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.num_full());
        self.representative.iter().map(|&d| full[d]).collect()
    }

    /// Sparse `num_full x num_free` prolongation matrix.
    pub fn prolongation(&self) -> crate::linalg::SparseMatrix {
        let t: Vec<(usize, usize, f64)> =
            self.free_of.iter().enumerate().filter_map(|(d, f)| f.map(|i| (d, i, 1.0))).collect();
        crate::linalg::SparseMatrix::from_triplets(self.num_full(), self.num_free, &t)
    }
}

/// Builds a constrained space.
pub fn build_space(mesh: &Mesh, family: Family, bc: Bc) -> Result<DofSpace, FemError> {
    DofSpace::new(mesh, family, bc)
}

/// A 3x3 tensor field whose rows are fields over one vector space
/// (stacked as `row * n + dof`).
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub rows: [Vec<f64>; 3],
}

impl TensorField {
    pub fn zeros(n: usize) -> TensorField {
        TensorField { rows: [vec![0.0; n], vec![0.0; n], vec![0.0; n]] }
    }

    pub fn from_stacked(x: &[f64]) -> TensorField {
        assert_eq!(x.len() % 3, 0);
        let n = x.len() / 3;
        TensorField { rows: [x[..n].to_vec(), x[n..2 * n].to_vec(), x[2 * n..].to_vec()] }
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.rows.concat()
    }

    pub fn row_len(&self) -> usize {
        self.rows[0].len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_primitive, Primitive, TagSelector, TAG_N};

    #[test]
    fn p1_dirichlet_counts() {
        let m1 = generate_primitive(Primitive::UnitCube, 1);
        assert_eq!(build_space(&m1, Family::P1Scalar, Bc::on(TAG_T)).unwrap().num_free(), 0);
        let m2 = generate_primitive(Primitive::UnitCube, 2);
        assert_eq!(build_space(&m2, Family::P1Scalar, Bc::on(TAG_T)).unwrap().num_free(), 1);
    }

    #[test]
    fn edge_count_without_constraints() {
        let m = generate_primitive(Primitive::UnitCube, 1);
        let s = build_space(&m, Family::Edge0, Bc::free()).unwrap();
        assert_eq!(s.num_free(), 19);
    }

    #[test]
    fn incompatible_combinations() {
        let m = generate_primitive(Primitive::UnitCube, 1);
        let cc = Bc { essential: Some(TAG_T), component_constant: true };
        assert!(build_space(&m, Family::P1Scalar, cc).is_err());
        assert!(build_space(&m, Family::P0Scalar, Bc::on(TAG_N)).is_err());
        let no_tag = Bc { essential: None, component_constant: true };
        assert!(build_space(&m, Family::P1Vector, no_tag).is_err());
    }

    #[test]
    fn component_constant_groups() {
        let m = generate_primitive(Primitive::UnitCube, 2);
        let two = TagSelector::Faces(vec![(0, 0.0), (0, 1.0)]).apply(&m).unwrap();
        let s = build_space(&two, Family::P1Vector, Bc { essential: Some(TAG_T), component_constant: true }).unwrap();
        // 27 vertices, 18 on the two faces fold into 2 per component
        assert_eq!(s.num_free(), 3 * (27 - 18 + 2));
        assert_eq!(s.num_groups(), 6);
        let x: Vec<f64> = (0..s.num_free()).map(|i| i as f64).collect();
        assert_eq!(s.restrict(&s.expand(&x)), x);
    }

    #[test]
    fn pinning_removes_one_dof() {
        let m = generate_primitive(Primitive::UnitCube, 2);
        let s = build_space(&m, Family::P1Scalar, Bc::free()).unwrap();
        let p = s.pinned(&[0]);
        assert_eq!(p.num_free(), s.num_free() - 1);
        assert_eq!(p.free_index(0), None);
        assert_eq!(p.free_index(1), Some(0));
    }
}
