//! Boundary tag selection and connected components of tagged boundary parts.

use super::{Mesh, MeshError, TAG_N, TAG_T};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Connected components of the boundary triangles carrying one tag.
///
/// Triangles are joined when they share a vertex, so that every boundary
/// vertex belongs to exactly one component. On manifold tag patches this
/// coincides with joining through shared edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryComponentMap {
    pub tag: u8,
    pub component_of: BTreeMap<usize, usize>,
    pub count: usize,
}

impl BoundaryComponentMap {
    /// Vertices of component `c`, ascending.
    pub fn vertices_of(&self, c: usize) -> Vec<usize> {
        self.component_of.iter().filter(|(_, &k)| k == c).map(|(&v, _)| v).collect()
    }
}

pub fn boundary_components(mesh: &Mesh, tag: u8) -> BoundaryComponentMap {
    let n = mesh.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut on = vec![false; n];
    for (t, &g) in mesh.btris().iter().zip(mesh.btags()) {
        if g != tag {
            continue;
        }
        for &v in t {
            on[v] = true;
        }
        for (a, b) in [(t[0], t[1]), (t[1], t[2])] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    // number components by first appearance in vertex order
    let mut label: BTreeMap<usize, usize> = BTreeMap::new();
    let mut component_of = BTreeMap::new();
    for v in 0..n {
        if on[v] {
            let r = find(&mut parent, v);
            let next = label.len();
            let c = *label.entry(r).or_insert(next);
            component_of.insert(v, c);
        }
    }
    BoundaryComponentMap { tag, count: label.len(), component_of }
}

/// How boundary triangles are assigned to Γ_t.
#[derive(Debug, Clone, PartialEq)]
pub enum TagSelector {
    /// Leave the tags as stored in the mesh.
    Keep,
    All,
    None,
    /// Swap Γ_t and Γ_n.
    Complement,
    /// Triangles lying in one of the planes `x[axis] = value`.
    Faces(Vec<(usize, f64)>),
    /// A file listing Γ_t triangles as `v0 v1 v2` lines; `#` starts a comment.
    File(PathBuf),
}

impl std::str::FromStr for TagSelector {
    type Err = String;

    /// Parses `all`, `none`, `complement`, `keep`, `faces x=0,z=1` and `file <path>`.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        match s {
            "all" => return Ok(TagSelector::All),
            "none" => return Ok(TagSelector::None),
            "complement" => return Ok(TagSelector::Complement),
            "keep" => return Ok(TagSelector::Keep),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("faces") {
            let rest = rest.trim_start_matches([' ', ':', '=']).trim();
            let mut planes = Vec::new();
            for item in rest.split(',').map(str::trim).filter(|i| !i.is_empty()) {
                let (axis, value) = item.split_once('=').ok_or_else(|| format!("bad face selector '{item}'"))?;
                let axis = match axis.trim() {
                    "x" | "x1" | "0" => 0,
                    "y" | "x2" | "1" => 1,
                    "z" | "x3" | "2" => 2,
                    other => return Err(format!("unknown axis '{other}'")),
                };
                let value: f64 = value.trim().parse().map_err(|_| format!("bad coordinate in '{item}'"))?;
                planes.push((axis, value));
            }
            if planes.is_empty() {
                return Err("face selector lists no planes".into());
            }
            return Ok(TagSelector::Faces(planes));
        }
        if let Some(rest) = s.strip_prefix("file") {
            let path = rest.trim_start_matches([' ', ':', '=']).trim();
            if path.is_empty() {
                return Err("file selector needs a path".into());
            }
            return Ok(TagSelector::File(PathBuf::from(path)));
        }
        Err(format!("unknown tag selector '{s}'"))
    }
}

impl TagSelector {
    /// Computes the tag of every boundary triangle.
    pub fn tags_for(&self, mesh: &Mesh) -> Result<Vec<u8>, MeshError> {
        let nb = mesh.btris().len();
        Ok(match self {
            TagSelector::Keep => mesh.btags().to_vec(),
            TagSelector::All => vec![TAG_T; nb],
            TagSelector::None => vec![TAG_N; nb],
            TagSelector::Complement => mesh.btags().iter().map(|&t| 1 - t).collect(),
            TagSelector::Faces(planes) => mesh
                .btris()
                .iter()
                .map(|t| {
                    let hit = planes.iter().any(|&(axis, value)| {
                        t.iter().all(|&v| (mesh.vertices()[v][axis] - value).abs() <= 1e-9 * value.abs().max(1.0))
                    });
                    if hit {
                        TAG_T
                    } else {
                        TAG_N
                    }
                })
                .collect(),
            TagSelector::File(path) => {
                let text = std::fs::read_to_string(path)?;
                let mut tags = vec![TAG_N; nb];
                for (i, line) in text.lines().enumerate() {
                    let line = line.split('#').next().unwrap_or("").trim();
                    if line.is_empty() {
                        continue;
                    }
                    let idx: Result<Vec<usize>, _> = line.split_whitespace().map(str::parse).collect();
                    let idx =
                        idx.map_err(|_| MeshError::Parse { line: i + 1, msg: format!("bad triangle '{line}'") })?;
                    if idx.len() != 3 {
                        return Err(MeshError::Parse { line: i + 1, msg: "triangle needs 3 vertex indices".into() });
                    }
                    let f = mesh
                        .face_index([idx[0], idx[1], idx[2]])
                        .and_then(|f| mesh.btris().iter().position(|t| mesh.face_index(*t) == Some(f)))
                        .ok_or_else(|| MeshError::NonManifoldBoundary(format!("{idx:?} is not a boundary triangle")))?;
                    tags[f] = TAG_T;
                }
                tags
            }
        })
    }

    pub fn apply(&self, mesh: &Mesh) -> Result<Mesh, MeshError> {
        mesh.with_tags(self.tags_for(mesh)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_primitive, Primitive};

    #[test]
    fn components_of_primitives() {
        let cube = generate_primitive(Primitive::UnitCube, 2);
        assert_eq!(boundary_components(&cube, TAG_T).count, 1);
        let opposite = TagSelector::Faces(vec![(0, 0.0), (0, 1.0)]).apply(&cube).unwrap();
        assert_eq!(boundary_components(&opposite, TAG_T).count, 2);
        let empty = TagSelector::None.apply(&cube).unwrap();
        let map = boundary_components(&empty, TAG_T);
        assert_eq!(map.count, 0);
        assert!(map.component_of.is_empty());
    }

    #[test]
    fn selector_parsing() {
        assert_eq!("all".parse::<TagSelector>().unwrap(), TagSelector::All);
        assert_eq!("faces x=0,z=1".parse::<TagSelector>().unwrap(), TagSelector::Faces(vec![(0, 0.0), (2, 1.0)]));
        assert!("faces".parse::<TagSelector>().is_err());
        assert!("bogus".parse::<TagSelector>().is_err());
    }

    #[test]
    fn complement_swaps() {
        let slab = generate_primitive(Primitive::SlabMixed, 1);
        let c = TagSelector::Complement.apply(&slab).unwrap();
        assert!((c.boundary_area(TAG_T) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn file_selector() {
        let cube = generate_primitive(Primitive::UnitCube, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.txt");
        let t = cube.btris()[3];
        std::fs::write(&path, format!("# one triangle\n{} {} {}\n", t[2], t[0], t[1])).unwrap();
        let tags = TagSelector::File(path).tags_for(&cube).unwrap();
        assert_eq!(tags.iter().filter(|&&g| g == TAG_T).count(), 1);
        assert_eq!(tags[3], TAG_T);
    }
}
