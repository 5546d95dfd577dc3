//! Per-tet geometry and lowest-order Whitney basis functions.

use crate::mesh::{cross, dot3, Mesh, Point, TET_EDGES};

pub(crate) type Vec3 = [f64; 3];

pub(crate) fn axpy(a: f64, x: Vec3, y: &mut Vec3) {
    for d in 0..3 {
        y[d] += a * x[d];
    }
}

pub(crate) fn scale(a: f64, x: Vec3) -> Vec3 {
    [a * x[0], a * x[1], a * x[2]]
}

/// Geometry of one tet: volume, vertices and barycentric gradients.
#[derive(Debug, Clone)]
pub struct TetGeom {
    pub vol: f64,
    pub pts: [Point; 4],
    pub grads: [Vec3; 4],
    /// global vertex indices
    pub verts: [usize; 4],
}

impl TetGeom {
    pub fn new(mesh: &Mesh, t: usize) -> TetGeom {
        let verts = mesh.tets()[t];
        let pts = mesh.tet_points(t);
        let e = [1, 2, 3].map(|i| [pts[i][0] - pts[0][0], pts[i][1] - pts[0][1], pts[i][2] - pts[0][2]]);
        let det = dot3(e[0], cross(e[1], e[2]));
        // rows of J^{-1}, with J = [e1 e2 e3] as columns
        let g1 = scale(1.0 / det, cross(e[1], e[2]));
        let g2 = scale(1.0 / det, cross(e[2], e[0]));
        let g3 = scale(1.0 / det, cross(e[0], e[1]));
        let g0 = [-(g1[0] + g2[0] + g3[0]), -(g1[1] + g2[1] + g3[1]), -(g1[2] + g2[2] + g3[2])];
        TetGeom { vol: det / 6.0, pts, grads: [g0, g1, g2, g3], verts }
    }

    pub fn point(&self, bary: &[f64; 4]) -> Point {
        let mut x = [0.0; 3];
        for i in 0..4 {
            axpy(bary[i], self.pts[i], &mut x);
        }
        x
    }

    /// Local vertex pair of edge `e`, ordered by global index.
    pub fn edge_pair(&self, e: usize) -> (usize, usize) {
        let [i, j] = TET_EDGES[e];
        if self.verts[i] < self.verts[j] {
            (i, j)
        } else {
            (j, i)
        }
    }

    /// Local vertices of the face opposite `k`, ordered by global index.
    pub fn face_triple(&self, k: usize) -> [usize; 3] {
        let mut f: Vec<usize> = (0..4).filter(|&i| i != k).collect();
        f.sort_by_key(|&i| self.verts[i]);
        [f[0], f[1], f[2]]
    }

    /// Edge basis `λ_a ∇λ_b - λ_b ∇λ_a` at a barycentric point.
    pub fn edge_basis(&self, e: usize, bary: &[f64; 4]) -> Vec3 {
        let (a, b) = self.edge_pair(e);
        let mut w = scale(bary[a], self.grads[b]);
        axpy(-bary[b], self.grads[a], &mut w);
        w
    }

    /// Constant curl `2 ∇λ_a x ∇λ_b` of the edge basis.
    pub fn edge_curl(&self, e: usize) -> Vec3 {
        let (a, b) = self.edge_pair(e);
        scale(2.0, cross(self.grads[a], self.grads[b]))
    }

    /// Face basis `2 (λ_a ∇λ_b x ∇λ_c + λ_b ∇λ_c x ∇λ_a + λ_c ∇λ_a x ∇λ_b)`.
    pub fn face_basis(&self, k: usize, bary: &[f64; 4]) -> Vec3 {
        let [a, b, c] = self.face_triple(k);
        let g = &self.grads;
        let mut w = scale(2.0 * bary[a], cross(g[b], g[c]));
        axpy(2.0 * bary[b], cross(g[c], g[a]), &mut w);
        axpy(2.0 * bary[c], cross(g[a], g[b]), &mut w);
        w
    }

    /// Constant divergence `6 ∇λ_a · (∇λ_b x ∇λ_c)` of the face basis.
    pub fn face_div(&self, k: usize) -> f64 {
        let [a, b, c] = self.face_triple(k);
        6.0 * dot3(self.grads[a], cross(self.grads[b], self.grads[c]))
    }

    /// Sign of face `k` relative to its global orientation: +1 when the
    /// normal `(x_b - x_a) x (x_c - x_a)` of the sorted triple points out of this tet.
    pub fn face_sign(&self, k: usize) -> f64 {
        let [a, b, c] = self.face_triple(k);
        let p = &self.pts;
        let n = cross(
            [p[b][0] - p[a][0], p[b][1] - p[a][1], p[b][2] - p[a][2]],
            [p[c][0] - p[a][0], p[c][1] - p[a][1], p[c][2] - p[a][2]],
        );
        let out = [p[a][0] - p[k][0], p[a][1] - p[k][1], p[a][2] - p[k][2]];
        if dot3(n, out) > 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_primitive, Primitive};

    #[test]
    fn barycentric_gradients_sum_to_zero_and_are_dual() {
        let m = generate_primitive(Primitive::UnitCube, 1);
        for t in 0..m.num_tets() {
            let g = TetGeom::new(&m, t);
            assert!((g.vol - 1.0 / 6.0).abs() < 1e-15);
            for i in 0..4 {
                for j in 1..4 {
                    let d = [0, 1, 2].map(|c| g.pts[j][c] - g.pts[0][c]);
                    let expect = if i == j {
                        1.0
                    } else if i == 0 {
                        -1.0
                    } else {
                        0.0
                    };
                    assert!((dot3(g.grads[i], d) - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn edge_basis_has_unit_tangential_moment() {
        let m = generate_primitive(Primitive::SlabMixed, 1);
        let g = TetGeom::new(&m, 2);
        for e in 0..6 {
            let (a, b) = g.edge_pair(e);
            for f in 0..6 {
                // the tangential component is constant along an edge; sample the midpoint
                let mut bary = [0.0; 4];
                let (p, q) = g.edge_pair(f);
                bary[p] = 0.5;
                bary[q] = 0.5;
                let w = g.edge_basis(e, &bary);
                let t = [0, 1, 2].map(|c| g.pts[q][c] - g.pts[p][c]);
                let expect = if (p, q) == (a, b) { 1.0 } else { 0.0 };
                assert!((dot3(w, t) - expect).abs() < 1e-14);
            }
        }
    }
}
