//! The line-based `kornmesh 1` ASCII format.

use super::{Mesh, MeshError, Point};
use std::fmt::Write as _;
use std::path::Path;

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

/// Serializes with shortest round-trip float formatting.
pub fn format_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str("kornmesh 1\n");
    let _ = writeln!(s, "vertices {}", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "tets {}", mesh.num_tets());
    for (t, sl) in mesh.tets().iter().zip(mesh.slices()) {
        let _ = writeln!(s, "{} {} {} {} {}", t[0], t[1], t[2], t[3], sl);
    }
    let _ = writeln!(s, "btris {}", mesh.btris().len());
    for (t, g) in mesh.btris().iter().zip(mesh.btags()) {
        let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], g);
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-empty line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let l = l.trim();
            self.last = i + 1;
            if !l.is_empty() {
                return Some((i + 1, l));
            }
        }
        None
    }

    fn section(&mut self, name: &str) -> Result<usize, MeshError> {
        let (line, l) = self
            .next()
            .ok_or(MeshError::MalformedHeader { line: self.last + 1, msg: format!("missing '{name}' section") })?;
        let mut it = l.split_whitespace();
        if it.next() != Some(name) {
            return Err(MeshError::MalformedHeader { line, msg: format!("expected '{name} <count>', found '{l}'") });
        }
        let count = it
            .next()
            .and_then(|c| c.parse::<usize>().ok())
            .ok_or_else(|| MeshError::MalformedHeader { line, msg: format!("bad count in '{l}'") })?;
        if it.next().is_some() {
            return Err(MeshError::MalformedHeader { line, msg: format!("trailing tokens in '{l}'") });
        }
        Ok(count)
    }

    fn record<T: std::str::FromStr, const K: usize>(&mut self, what: &str) -> Result<[T; K], MeshError> {
        let (line, l) = self
            .next()
            .ok_or(MeshError::Parse { line: self.last + 1, msg: format!("unexpected end of file in {what}") })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != K {
            return Err(MeshError::Parse {
                line,
                msg: format!("{what} record needs {K} fields, found {}", toks.len()),
            });
        }
        let vals: Result<Vec<T>, _> = toks.iter().map(|t| t.parse::<T>()).collect();
        let vals = vals.map_err(|_| MeshError::Parse { line, msg: format!("invalid number in '{l}'") })?;
        Ok(vals.try_into().ok().expect("length checked"))
    }
}

pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    match lines.next() {
        Some((_, "kornmesh 1")) => {}
        Some((line, l)) => {
            return Err(MeshError::MalformedHeader { line, msg: format!("expected 'kornmesh 1', found '{l}'") })
        }
        None => return Err(MeshError::MalformedHeader { line: 1, msg: "empty file".into() }),
    }
    let nv = lines.section("vertices")?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let p: [f64; 3] = lines.record("vertex")?;
        if p.iter().any(|c| !c.is_finite()) {
            return Err(MeshError::Parse { line: lines.last, msg: "non-finite coordinate".into() });
        }
        vertices.push(p);
    }
    let nt = lines.section("tets")?;
    let mut tets = Vec::with_capacity(nt);
    let mut slices = Vec::with_capacity(nt);
    for _ in 0..nt {
        let r: [usize; 5] = lines.record("tet")?;
        tets.push([r[0], r[1], r[2], r[3]]);
        slices.push(r[4]);
    }
    let nb = lines.section("btris")?;
    let mut btris = Vec::with_capacity(nb);
    let mut btags = Vec::with_capacity(nb);
    for _ in 0..nb {
        let r: [u64; 4] = lines.record("btri")?;
        if r[3] > 1 {
            return Err(MeshError::InvalidTag { tag: r[3] });
        }
        btris.push([r[0] as usize, r[1] as usize, r[2] as usize]);
        btags.push(r[3] as u8);
    }
    if let Some((line, l)) = lines.next() {
        return Err(MeshError::Parse { line, msg: format!("unexpected trailing content '{l}'") });
    }
    Mesh::new(vertices, tets, slices, btris, btags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_primitive, Primitive};

    #[test]
    fn round_trip_is_identity() {
        for kind in [Primitive::UnitCube, Primitive::CubeWithTunnel] {
            let m = generate_primitive(kind, 1);
            let back = parse_mesh(&format_mesh(&m)).unwrap();
            assert_eq!(back, m);
        }
        let m = generate_primitive(Primitive::SlabMixed, 3);
        assert_eq!(parse_mesh(&format_mesh(&m)).unwrap(), m);
    }

    #[test]
    fn index_out_of_range() {
        let text = format_mesh(&generate_primitive(Primitive::UnitCube, 1)).replacen("tets 6\n0 ", "tets 6\n8 ", 1);
        assert!(matches!(parse_mesh(&text), Err(MeshError::IndexOutOfRange { index: 8, .. })));
    }

    #[test]
    fn duplicated_boundary_triangle() {
        let m = generate_primitive(Primitive::UnitCube, 1);
        let mut text = format_mesh(&m).replace("btris 12", "btris 13");
        let t = m.btris()[0];
        text.push_str(&format!("{} {} {} 1\n", t[0], t[1], t[2]));
        assert!(matches!(parse_mesh(&text), Err(MeshError::NonManifoldBoundary(_))));
    }

    #[test]
    fn bad_header() {
        assert!(matches!(parse_mesh("kornmesh 2\n"), Err(MeshError::MalformedHeader { line: 1, .. })));
        assert!(matches!(parse_mesh("kornmesh 1\nvertices x\n"), Err(MeshError::MalformedHeader { line: 2, .. })));
    }
}
