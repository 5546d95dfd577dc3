//! Structured test geometries built from Kuhn-split hexahedra.

use super::{signed_volume, Mesh, Point, TAG_N, TAG_T};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Primitive {
    /// `[0,1]^3`, every boundary triangle tagged Γ_t, one slice.
    UnitCube,
    /// `[0,1]^3`, face `x3 = 0` tagged Γ_t and the rest Γ_n, one slice.
    SlabMixed,
    /// `[0,3]^2 x [0,1]` minus `(1,2)^2 x (0,1)`, all boundary Γ_t,
    /// two slices that cut the ring into two L-shaped halves.
    CubeWithTunnel,
}

impl Primitive {
    pub fn name(self) -> &'static str {
        match self {
            Primitive::UnitCube => "unit_cube",
            Primitive::SlabMixed => "slab_mixed",
            Primitive::CubeWithTunnel => "cube_with_tunnel",
        }
    }

    /// Exact volume of the domain.
    pub fn volume(self) -> f64 {
        match self {
            Primitive::UnitCube | Primitive::SlabMixed => 1.0,
            Primitive::CubeWithTunnel => 8.0,
        }
    }
}

impl std::str::FromStr for Primitive {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "unit_cube" => Ok(Primitive::UnitCube),
            "slab_mixed" => Ok(Primitive::SlabMixed),
            "cube_with_tunnel" => Ok(Primitive::CubeWithTunnel),
            _ => Err(format!("unknown primitive '{s}' (expected unit_cube, slab_mixed or cube_with_tunnel)")),
        }
    }
}

/// Kuhn split of the unit hex: one tet per axis permutation, each walking
/// from corner 000 to corner 111 along the permuted axes.
const KUHN_PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Tets of a hex grid with `cells[i][j][k]` kept when `keep(i, j, k)`.
/// Coordinates are `(i/n, j/n, k/n)`.
fn hex_grid(
    dims: [usize; 3],
    n: usize,
    keep: impl Fn(usize, usize, usize) -> bool,
    slice: impl Fn(usize, usize, usize) -> usize,
    tag: impl Fn(Point) -> u8,
) -> Mesh {
    let [nx, ny, nz] = dims;
    let mut index: BTreeMap<[usize; 3], usize> = BTreeMap::new();
    // grid points used by kept cells, numbered with x fastest
    let mut used = vec![false; (nx + 1) * (ny + 1) * (nz + 1)];
    let lin = |p: [usize; 3]| p[0] + (nx + 1) * (p[1] + (ny + 1) * p[2]);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if keep(i, j, k) {
                    for d in 0..8 {
                        used[lin([i + (d & 1), j + ((d >> 1) & 1), k + ((d >> 2) & 1)])] = true;
                    }
                }
            }
        }
    }
    let mut vertices = Vec::new();
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                if used[lin([i, j, k])] {
                    index.insert([i, j, k], vertices.len());
                    vertices.push([i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64]);
                }
            }
        }
    }
    let mut tets = Vec::new();
    let mut slices = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if !keep(i, j, k) {
                    continue;
                }
                for perm in KUHN_PERMS {
                    let mut p = [i, j, k];
                    let mut t = [0usize; 4];
                    t[0] = index[&p];
                    for (s, &axis) in perm.iter().enumerate() {
                        p[axis] += 1;
                        t[s + 1] = index[&p];
                    }
                    if signed_volume(t.map(|v| vertices[v])) < 0.0 {
                        t.swap(2, 3);
                    }
                    tets.push(t);
                    slices.push(slice(i, j, k));
                }
            }
        }
    }
    let (btris, btags) = boundary_of(&vertices, &tets, tag);
    Mesh::new(vertices, tets, slices, btris, btags).expect("generated mesh is valid")
}

/// Boundary faces (faces of exactly one tet), oriented outward, tagged by
/// their centroid.
pub(crate) fn boundary_of(
    vertices: &[Point],
    tets: &[[usize; 4]],
    tag: impl Fn(Point) -> u8,
) -> (Vec<[usize; 3]>, Vec<u8>) {
    let mut faces: BTreeMap<[usize; 3], (usize, [usize; 3])> = BTreeMap::new();
    for t in tets {
        // faces opposite each vertex, ordered so the normal points outward
        for f in [[t[1], t[2], t[3]], [t[0], t[3], t[2]], [t[0], t[1], t[3]], [t[0], t[2], t[1]]] {
            let mut key = f;
            key.sort_unstable();
            faces.entry(key).and_modify(|e| e.0 += 1).or_insert((1, f));
        }
    }
    let mut btris = Vec::new();
    let mut btags = Vec::new();
    for (count, f) in faces.into_values() {
        if count == 1 {
            let c = [0, 1, 2].map(|d| (vertices[f[0]][d] + vertices[f[1]][d] + vertices[f[2]][d]) / 3.0);
            btris.push(f);
            btags.push(tag(c));
        }
    }
    (btris, btags)
}

/// Generates one of the structured primitives with `n >= 1` cells per unit length.
pub fn generate_primitive(kind: Primitive, n: usize) -> Mesh {
    assert!(n >= 1, "subdivision count must be at least 1");
    let eps = 1e-9;
    match kind {
        Primitive::UnitCube => hex_grid([n; 3], n, |_, _, _| true, |_, _, _| 0, |_| TAG_T),
        Primitive::SlabMixed => {
            hex_grid([n; 3], n, |_, _, _| true, |_, _, _| 0, |c| if c[2] < eps { TAG_T } else { TAG_N })
        }
        Primitive::CubeWithTunnel => hex_grid(
            [3 * n, 3 * n, n],
            n,
            |i, j, _| !((n..2 * n).contains(&i) && (n..2 * n).contains(&j)),
            |i, j, _| if i < n || j < n { 0 } else { 1 },
            |_| TAG_T,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cube_n1() {
        let m = generate_primitive(Primitive::UnitCube, 1);
        assert_eq!(m.num_vertices(), 8);
        assert_eq!(m.num_tets(), 6);
        assert_eq!(m.btris().len(), 12);
        assert!(m.btags().iter().all(|&t| t == TAG_T));
        assert_eq!(m.num_edges(), 19);
    }

    #[test]
    fn unit_cube_n2_area() {
        let m = generate_primitive(Primitive::UnitCube, 2);
        assert_eq!(m.num_tets(), 48);
        assert!((m.boundary_area(TAG_T) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn volumes_match_domains() {
        for kind in [Primitive::UnitCube, Primitive::SlabMixed, Primitive::CubeWithTunnel] {
            for n in 1..=3 {
                let m = generate_primitive(kind, n);
                assert!((m.total_volume() - kind.volume()).abs() <= 1e-13 * kind.volume());
            }
        }
    }

    #[test]
    fn slab_tags_bottom_face_only() {
        let m = generate_primitive(Primitive::SlabMixed, 2);
        assert!((m.boundary_area(TAG_T) - 1.0).abs() < 1e-14);
        assert!((m.boundary_area(TAG_N) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn tunnel_is_a_solid_torus() {
        let m = generate_primitive(Primitive::CubeWithTunnel, 1);
        assert_eq!(m.num_slices(), 2);
        assert_eq!(m.boundary_euler_characteristic(), 0);
        let m2 = generate_primitive(Primitive::CubeWithTunnel, 2);
        assert_eq!(m2.num_vertices(), 144);
        assert_eq!(m2.num_edges(), 656);
    }

    #[test]
    fn parse_names() {
        assert_eq!("slab_mixed".parse::<Primitive>().unwrap(), Primitive::SlabMixed);
        assert!("sphere".parse::<Primitive>().is_err());
    }
}
