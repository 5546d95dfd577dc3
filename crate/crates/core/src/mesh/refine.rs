//! Uniform 1-to-8 red refinement.

use super::{signed_volume, Mesh};

/// Splits every tet into eight children (Bey's scheme) and every boundary
/// triangle into four. Midpoint of edge `e` becomes vertex `nv + e`.
/// Children inherit the parent's slice label, triangles their tag.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    let nv = mesh.num_vertices();
    let mut vertices = mesh.vertices().to_vec();
    for &[a, b] in mesh.edges() {
        let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
        vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])]);
    }
    let mid = |a: usize, b: usize| nv + mesh.edge_index(a, b).expect("edge of mesh");
    let mut tets = Vec::with_capacity(8 * mesh.num_tets());
    let mut slices = Vec::with_capacity(8 * mesh.num_tets());
    for (t, &s) in mesh.tets().iter().zip(mesh.slices()) {
        let [x0, x1, x2, x3] = *t;
        let (x01, x02, x03) = (mid(x0, x1), mid(x0, x2), mid(x0, x3));
        let (x12, x13, x23) = (mid(x1, x2), mid(x1, x3), mid(x2, x3));
        let children = [
            [x0, x01, x02, x03],
            [x01, x1, x12, x13],
            [x02, x12, x2, x23],
            [x03, x13, x23, x3],
            [x01, x02, x03, x13],
            [x01, x02, x12, x13],
            [x02, x03, x13, x23],
            [x02, x12, x13, x23],
        ];
        for mut c in children {
            if signed_volume(c.map(|v| vertices[v])) < 0.0 {
                c.swap(2, 3);
            }
            tets.push(c);
            slices.push(s);
        }
    }
    let mut btris = Vec::with_capacity(4 * mesh.btris().len());
    let mut btags = Vec::with_capacity(4 * mesh.btris().len());
    for (t, &g) in mesh.btris().iter().zip(mesh.btags()) {
        let [a, b, c] = *t;
        let (ab, bc, ac) = (mid(a, b), mid(b, c), mid(a, c));
        for child in [[a, ab, ac], [ab, b, bc], [ac, bc, c], [ab, bc, ac]] {
            btris.push(child);
            btags.push(g);
        }
    }
    Mesh::new(vertices, tets, slices, btris, btags).expect("refinement of a valid mesh is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_primitive, Primitive, TAG_N, TAG_T};

    #[test]
    fn refine_cube() {
        let m = refine_uniform(&generate_primitive(Primitive::UnitCube, 1));
        assert_eq!(m.num_tets(), 48);
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
        assert!((m.boundary_area(TAG_T) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn refine_preserves_tags_and_slices() {
        let base = generate_primitive(Primitive::CubeWithTunnel, 1);
        let m = refine_uniform(&base);
        for t in 0..base.num_tets() {
            for c in 0..8 {
                assert_eq!(m.slices()[8 * t + c], base.slices()[t]);
            }
        }
        let slab = generate_primitive(Primitive::SlabMixed, 1);
        let r = refine_uniform(&slab);
        assert_eq!(r.boundary_area(TAG_T), slab.boundary_area(TAG_T));
        assert_eq!(r.boundary_area(TAG_N), slab.boundary_area(TAG_N));
    }
}
