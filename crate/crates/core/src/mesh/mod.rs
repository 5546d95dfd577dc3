//! Tetrahedral meshes with tagged boundary triangles and slice labels.
//!
//! Boundary tag 1 marks the tangential part Γ_t, tag 0 the normal part Γ_n.

mod generate;
mod io;
mod refine;
mod tags;

pub use generate::{generate_primitive, Primitive};
pub use io::{format_mesh, parse_mesh, read_mesh, write_mesh};
pub use refine::refine_uniform;
pub use tags::{boundary_components, BoundaryComponentMap, TagSelector};

use std::collections::BTreeMap;

pub type Point = [f64; 3];

pub const TAG_N: u8 = 0;
pub const TAG_T: u8 = 1;

/// Local vertex pairs of the six tet edges.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header at line {line}: {msg}")]
    MalformedHeader { line: usize, msg: String },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{what} index {index} out of range (count {bound})")]
    IndexOutOfRange { what: &'static str, index: usize, bound: usize },
    #[error("non-manifold boundary: {0}")]
    NonManifoldBoundary(String),
    #[error("tet {tet} has non-positive volume {volume:e}")]
    NonPositiveVolume { tet: usize, volume: f64 },
    #[error("boundary tag {tag} is neither 0 nor 1")]
    InvalidTag { tag: u64 },
    #[error("slice {slice} is empty")]
    EmptySlice { slice: usize },
    #[error("slice {slice} is not edge-connected")]
    DisconnectedSlice { slice: usize },
    #[error("degenerate tet {tet}: repeated vertex")]
    DegenerateTet { tet: usize },
}

/// A validated tetrahedral mesh.
///
/// Edges are stored as sorted vertex pairs and faces as sorted vertex
/// triples, each list in lexicographic order; an edge is oriented from its
/// lower to its higher vertex index.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    tets: Vec<[usize; 4]>,
    slices: Vec<usize>,
    btris: Vec<[usize; 3]>,
    btags: Vec<u8>,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    tet_edges: Vec<[usize; 6]>,
    /// face opposite local vertex `i`
    tet_faces: Vec<[usize; 4]>,
    btri_face: Vec<usize>,
    num_slices: usize,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: Point, b: Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot3(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

pub(crate) fn signed_volume(p: [Point; 4]) -> f64 {
    dot3(sub(p[1], p[0]), cross(sub(p[2], p[0]), sub(p[3], p[0]))) / 6.0
}

impl Mesh {
    /// Builds and validates a mesh.
    pub fn new(
        vertices: Vec<Point>,
        tets: Vec<[usize; 4]>,
        slices: Vec<usize>,
        btris: Vec<[usize; 3]>,
        btags: Vec<u8>,
    ) -> Result<Mesh, MeshError> {
        assert_eq!(tets.len(), slices.len());
        assert_eq!(btris.len(), btags.len());
        let nv = vertices.len();
        for t in &tets {
            for &v in t {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange { what: "tet vertex", index: v, bound: nv });
                }
            }
        }
        for t in &btris {
            for &v in t {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange { what: "boundary triangle vertex", index: v, bound: nv });
                }
            }
        }
        for &tag in &btags {
            if tag > 1 {
                return Err(MeshError::InvalidTag { tag: tag as u64 });
            }
        }
        for (i, t) in tets.iter().enumerate() {
            let mut s = *t;
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(MeshError::DegenerateTet { tet: i });
            }
            let vol = signed_volume(t.map(|v| vertices[v]));
            if !(vol > 0.0) {
                return Err(MeshError::NonPositiveVolume { tet: i, volume: vol });
            }
        }

        let mut edges: Vec<[usize; 2]> =
            tets.iter().flat_map(|t| TET_EDGES.map(|[a, b]| [t[a].min(t[b]), t[a].max(t[b])])).collect();
        edges.sort_unstable();
        edges.dedup();
        let mut all_faces: Vec<[usize; 3]> = tets
            .iter()
            .flat_map(|t| [[t[1], t[2], t[3]], [t[0], t[2], t[3]], [t[0], t[1], t[3]], [t[0], t[1], t[2]]].map(sorted3))
            .collect();
        all_faces.sort_unstable();
        let mut faces: Vec<[usize; 3]> = Vec::new();
        let mut face_count: Vec<usize> = Vec::new();
        for f in all_faces {
            if faces.last() == Some(&f) {
                *face_count.last_mut().unwrap() += 1;
            } else {
                faces.push(f);
                face_count.push(1);
            }
        }
        if let Some(i) = face_count.iter().position(|&c| c > 2) {
            return Err(MeshError::NonManifoldBoundary(format!(
                "face {:?} shared by {} tets",
                faces[i], face_count[i]
            )));
        }
        let edge_index = |a: usize, b: usize| edges.binary_search(&[a.min(b), a.max(b)]).unwrap();
        let face_index = |f: [usize; 3]| faces.binary_search(&sorted3(f)).unwrap();
        let tet_edges: Vec<[usize; 6]> = tets.iter().map(|t| TET_EDGES.map(|[a, b]| edge_index(t[a], t[b]))).collect();
        let tet_faces: Vec<[usize; 4]> = tets
            .iter()
            .map(|t| [[t[1], t[2], t[3]], [t[0], t[2], t[3]], [t[0], t[1], t[3]], [t[0], t[1], t[2]]].map(face_index))
            .collect();

        let mut seen = vec![false; faces.len()];
        let mut btri_face = Vec::with_capacity(btris.len());
        for t in &btris {
            let key = sorted3(*t);
            let Ok(f) = faces.binary_search(&key) else {
                return Err(MeshError::NonManifoldBoundary(format!("boundary triangle {t:?} is not a tet face")));
            };
            if face_count[f] != 1 {
                return Err(MeshError::NonManifoldBoundary(format!("interior face {t:?} listed as boundary")));
            }
            if seen[f] {
                return Err(MeshError::NonManifoldBoundary(format!("boundary triangle {t:?} listed twice")));
            }
            seen[f] = true;
            btri_face.push(f);
        }
        if let Some(f) = (0..faces.len()).find(|&f| face_count[f] == 1 && !seen[f]) {
            return Err(MeshError::NonManifoldBoundary(format!("boundary face {:?} has no tag", faces[f])));
        }

        let num_slices = slices.iter().map(|&s| s + 1).max().unwrap_or(0);
        let mesh =
            Mesh { vertices, tets, slices, btris, btags, edges, faces, tet_edges, tet_faces, btri_face, num_slices };
        mesh.check_slices()?;
        Ok(mesh)
    }

    fn check_slices(&self) -> Result<(), MeshError> {
        // union-find over cells sharing an edge, restricted to one slice
        let mut by_edge: Vec<Vec<usize>> = vec![Vec::new(); self.edges.len()];
        for (t, es) in self.tet_edges.iter().enumerate() {
            for &e in es {
                by_edge[e].push(t);
            }
        }
        let mut parent: Vec<usize> = (0..self.tets.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for cells in &by_edge {
            for i in 0..cells.len() {
                for j in i + 1..cells.len() {
                    let (a, b) = (cells[i], cells[j]);
                    if self.slices[a] == self.slices[b] {
                        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                        if ra != rb {
                            parent[ra.max(rb)] = ra.min(rb);
                        }
                    }
                }
            }
        }
        let mut root_of_slice: Vec<Option<usize>> = vec![None; self.num_slices];
        for t in 0..self.tets.len() {
            let r = find(&mut parent, t);
            let s = self.slices[t];
            match root_of_slice[s] {
                None => root_of_slice[s] = Some(r),
                Some(r0) if r0 != r => return Err(MeshError::DisconnectedSlice { slice: s }),
                _ => {}
            }
        }
        if let Some(s) = root_of_slice.iter().position(Option::is_none) {
            return Err(MeshError::EmptySlice { slice: s });
        }
        Ok(())
    }

    /// Non-fatal findings: slices without any Γ_t triangle while Γ_t ≠ ∅.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.has_tag(TAG_T) {
            return out;
        }
        let tagged = self.tagged_faces(TAG_T);
        let mut touches = vec![false; self.num_slices];
        for (t, fs) in self.tet_faces.iter().enumerate() {
            if fs.iter().any(|&f| tagged[f]) {
                touches[self.slices[t]] = true;
            }
        }
        for (s, ok) in touches.iter().enumerate() {
            if !ok {
                out.push(format!("slice {s} touches no Γ_t triangle although Γ_t is non-empty"));
            }
        }
        out
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn slices(&self) -> &[usize] {
        &self.slices
    }

    pub fn btris(&self) -> &[[usize; 3]] {
        &self.btris
    }

    pub fn btags(&self) -> &[u8] {
        &self.btags
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn tet_edges(&self, t: usize) -> [usize; 6] {
        self.tet_edges[t]
    }

    pub fn tet_faces(&self, t: usize) -> [usize; 4] {
        self.tet_faces[t]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_slices(&self) -> usize {
        self.num_slices
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&[a.min(b), a.max(b)]).ok()
    }

    pub fn face_index(&self, f: [usize; 3]) -> Option<usize> {
        self.faces.binary_search(&sorted3(f)).ok()
    }

    pub fn tet_points(&self, t: usize) -> [Point; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn volume(&self, t: usize) -> f64 {
        signed_volume(self.tet_points(t))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_tets()).map(|t| self.volume(t)).sum()
    }

    pub fn has_tag(&self, tag: u8) -> bool {
        self.btags.contains(&tag)
    }

    pub fn triangle_area(&self, tri: [usize; 3]) -> f64 {
        let p = tri.map(|v| self.vertices[v]);
        let c = cross(sub(p[1], p[0]), sub(p[2], p[0]));
        0.5 * dot3(c, c).sqrt()
    }

    /// Total area of boundary triangles carrying `tag`.
    pub fn boundary_area(&self, tag: u8) -> f64 {
        self.btris.iter().zip(&self.btags).filter(|(_, &g)| g == tag).map(|(t, _)| self.triangle_area(*t)).sum()
    }

    /// Per-face flag: face is a boundary triangle with `tag`.
    pub fn tagged_faces(&self, tag: u8) -> Vec<bool> {
        let mut out = vec![false; self.faces.len()];
        for (i, &f) in self.btri_face.iter().enumerate() {
            if self.btags[i] == tag {
                out[f] = true;
            }
        }
        out
    }

    /// Per-edge flag: edge lies in a boundary triangle with `tag`.
    pub fn tagged_edges(&self, tag: u8) -> Vec<bool> {
        let mut out = vec![false; self.edges.len()];
        for (t, &g) in self.btris.iter().zip(&self.btags) {
            if g == tag {
                for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])] {
                    out[self.edge_index(a, b).unwrap()] = true;
                }
            }
        }
        out
    }

    /// Per-vertex flag: vertex lies in a boundary triangle with `tag`.
    pub fn tagged_vertices(&self, tag: u8) -> Vec<bool> {
        let mut out = vec![false; self.vertices.len()];
        for (t, &g) in self.btris.iter().zip(&self.btags) {
            if g == tag {
                for &v in t {
                    out[v] = true;
                }
            }
        }
        out
    }

    /// Euler characteristic `V - E + F` of the boundary surface.
    pub fn boundary_euler_characteristic(&self) -> i64 {
        let mut verts: Vec<usize> = self.btris.iter().flatten().copied().collect();
        verts.sort_unstable();
        verts.dedup();
        let mut edges: Vec<[usize; 2]> = self
            .btris
            .iter()
            .flat_map(|t| [[t[0], t[1]], [t[1], t[2]], [t[0], t[2]]].map(|[a, b]| [a.min(b), a.max(b)]))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        verts.len() as i64 - edges.len() as i64 + self.btris.len() as i64
    }

    /// Same mesh with new boundary tags (one per boundary triangle).
    pub fn with_tags(&self, tags: Vec<u8>) -> Result<Mesh, MeshError> {
        assert_eq!(tags.len(), self.btris.len());
        if let Some(&t) = tags.iter().find(|&&t| t > 1) {
            return Err(MeshError::InvalidTag { tag: t as u64 });
        }
        let mut m = self.clone();
        m.btags = tags;
        Ok(m)
    }

    /// Same mesh with new slice labels.
    pub fn with_slices(&self, slices: Vec<usize>) -> Result<Mesh, MeshError> {
        Mesh::new(self.vertices.clone(), self.tets.clone(), slices, self.btris.clone(), self.btags.clone())
    }

    /// Applies a vertex map; tets are reoriented if the map reverses orientation.
    pub fn transformed(&self, f: impl Fn(Point) -> Point) -> Result<Mesh, MeshError> {
        let vertices: Vec<Point> = self.vertices.iter().map(|&p| f(p)).collect();
        let tets = self
            .tets
            .iter()
            .map(|&t| if signed_volume(t.map(|v| vertices[v])) < 0.0 { [t[0], t[1], t[3], t[2]] } else { t })
            .collect();
        Mesh::new(vertices, tets, self.slices.clone(), self.btris.clone(), self.btags.clone())
    }

    /// Short descriptive summary used in reports.
    pub fn summary(&self) -> BTreeMap<&'static str, usize> {
        BTreeMap::from([
            ("vertices", self.num_vertices()),
            ("tets", self.num_tets()),
            ("edges", self.num_edges()),
            ("faces", self.num_faces()),
            ("boundary_tris", self.btris.len()),
            ("slices", self.num_slices),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_tet() -> (Vec<Point>, Vec<[usize; 4]>) {
        (vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], vec![[0, 1, 2, 3]])
    }

    fn all_faces_of(t: [usize; 4]) -> Vec<[usize; 3]> {
        vec![[t[1], t[2], t[3]], [t[0], t[2], t[3]], [t[0], t[1], t[3]], [t[0], t[1], t[2]]]
    }

    #[test]
    fn negative_volume_rejected() {
        let (v, _) = single_tet();
        let r = Mesh::new(v, vec![[0, 2, 1, 3]], vec![0], all_faces_of([0, 2, 1, 3]), vec![1; 4]);
        assert!(matches!(r, Err(MeshError::NonPositiveVolume { tet: 0, .. })));
    }

    #[test]
    fn missing_boundary_face_rejected() {
        let (v, t) = single_tet();
        let mut b = all_faces_of(t[0]);
        b.pop();
        assert!(matches!(Mesh::new(v, t, vec![0], b, vec![1; 3]), Err(MeshError::NonManifoldBoundary(_))));
    }

    #[test]
    fn disconnected_slice_rejected() {
        let m = generate::generate_primitive(Primitive::UnitCube, 3);
        // slice 1 = two far-apart cells
        let mut s = vec![0; m.num_tets()];
        for t in 0..6 {
            s[t] = 1;
            s[m.num_tets() - 1 - t] = 1;
        }
        assert!(matches!(m.with_slices(s), Err(MeshError::DisconnectedSlice { slice: 1 })));
    }

    #[test]
    fn slice_without_gamma_t_warns() {
        let tunnel = generate::generate_primitive(Primitive::CubeWithTunnel, 1);
        assert!(tunnel.warnings().is_empty());
        let slab = generate::generate_primitive(Primitive::SlabMixed, 2);
        // top half of the slab does not touch the bottom face
        let s: Vec<usize> =
            (0..slab.num_tets()).map(|t| if slab.tet_points(t).iter().all(|p| p[2] >= 0.5) { 1 } else { 0 }).collect();
        let sliced = slab.with_slices(s).unwrap();
        assert_eq!(sliced.warnings().len(), 1);
    }

    #[test]
    fn tagged_edges_of_a_face() {
        let slab = generate::generate_primitive(Primitive::SlabMixed, 1);
        // the bottom square: 4 sides + 1 diagonal
        assert_eq!(slab.tagged_edges(TAG_T).iter().filter(|&&b| b).count(), 5);
        assert_eq!(slab.tagged_vertices(TAG_T).iter().filter(|&&b| b).count(), 4);
    }
}
