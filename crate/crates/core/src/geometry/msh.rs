//! ASCII Gmsh MSH 2.2 reader and writer.
//!
//! Tetrahedra (element type 4) carry their subdomain label as physical tag.
//! Boundary triangles (type 2) carry the physical group `SIGMA` or `REST`,
//! named in `$PhysicalNames`; without that section ids 1 and 2 are used.
//! Other element types are skipped on read.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::mesh::{signed_volume_of, BoundaryFacet, FacetTag, Mesh};
use crate::error::{Error, Result};

const SIGMA_ID: usize = 1;
const REST_ID: usize = 2;

/// Serialize a mesh. Coordinates use the shortest round-trip representation.
pub fn write_msh_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    s.push_str("$PhysicalNames\n2\n");
    let _ = writeln!(s, "2 {SIGMA_ID} \"SIGMA\"");
    let _ = writeln!(s, "2 {REST_ID} \"REST\"");
    s.push_str("$EndPhysicalNames\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.vertices.len());
    for (i, p) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} {:?}", i + 1, p[0], p[1], p[2]);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.boundary_facets.len() + mesh.tets.len());
    let mut id = 1;
    for f in &mesh.boundary_facets {
        let tag = match f.tag {
            FacetTag::Sigma => SIGMA_ID,
            FacetTag::Rest => REST_ID,
        };
        let v = f.vertices;
        let _ = writeln!(s, "{id} 2 2 {tag} {tag} {} {} {}", v[0] + 1, v[1] + 1, v[2] + 1);
        id += 1;
    }
    for (t, l) in mesh.tets.iter().zip(&mesh.labels) {
        let _ = writeln!(s, "{id} 4 2 {l} {l} {} {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1);
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

pub fn write_msh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, write_msh_string(mesh))?;
    Ok(())
}

/// What the reader had to fix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    /// Tetrahedra whose orientation was flipped.
    pub repaired_tets: usize,
}

pub fn ingest_mesh(path: &Path) -> Result<(Mesh, IngestReport)> {
    let text = std::fs::read_to_string(path)?;
    parse_msh(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        for (n, l) in self.inner.by_ref() {
            self.line = n + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Ok(l);
            }
        }
        Err(Error::Parse { line: self.line + 1, msg: "unexpected end of file".into() })
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn expect(&mut self, marker: &str) -> Result<()> {
        let l = self.next_line()?;
        if l != marker {
            return Err(self.err(format!("expected {marker}, found `{l}`")));
        }
        Ok(())
    }

    fn numbers<T: std::str::FromStr>(&self, l: &str) -> Result<Vec<T>> {
        l.split_whitespace()
            .map(|w| w.parse::<T>().map_err(|_| self.err(format!("invalid number `{w}`"))))
            .collect()
    }
}

pub fn parse_msh(text: &str) -> Result<(Mesh, IngestReport)> {
    let mut lines = Lines { inner: text.lines().enumerate(), line: 0 };
    let mut sigma_id = SIGMA_ID;
    let mut rest_id = REST_ID;
    let mut node_index: HashMap<usize, usize> = HashMap::new();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    // raw elements: (type, tags, node ids, line)
    let mut raw: Vec<(usize, Vec<usize>, Vec<usize>, usize)> = Vec::new();
    let mut seen_format = false;

    while let Ok(header) = lines.next_line() {
        match header {
            "$MeshFormat" => {
                let l = lines.next_line()?;
                let ver = l.split_whitespace().next().unwrap_or("");
                if !ver.starts_with("2.") {
                    return Err(lines.err(format!("unsupported MSH version {ver}")));
                }
                if l.split_whitespace().nth(1) != Some("0") {
                    return Err(lines.err("only ASCII MSH is supported"));
                }
                lines.expect("$EndMeshFormat")?;
                seen_format = true;
            }
            "$PhysicalNames" => {
                let header = lines.next_line()?;
                let n: usize = lines.numbers::<usize>(header)?.first().copied().unwrap_or(0);
                for _ in 0..n {
                    let l = lines.next_line()?;
                    let mut parts = l.splitn(3, char::is_whitespace);
                    let _dim = parts.next();
                    let id: usize = parts
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| lines.err("bad physical name entry"))?;
                    let name = parts.next().unwrap_or("").trim().trim_matches('"');
                    match name {
                        "SIGMA" => sigma_id = id,
                        "REST" => rest_id = id,
                        _ => {}
                    }
                }
                lines.expect("$EndPhysicalNames")?;
            }
            "$Nodes" => {
                let l = lines.next_line()?;
                let n: usize = l.parse().map_err(|_| lines.err("bad node count"))?;
                for _ in 0..n {
                    let l = lines.next_line()?;
                    let mut w = l.split_whitespace();
                    let id: usize = w
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| lines.err("bad node id"))?;
                    let xyz: Vec<f64> = lines.numbers(&w.collect::<Vec<_>>().join(" "))?;
                    if xyz.len() != 3 {
                        return Err(lines.err("node needs three coordinates"));
                    }
                    node_index.insert(id, vertices.len());
                    vertices.push([xyz[0], xyz[1], xyz[2]]);
                }
                lines.expect("$EndNodes")?;
            }
            "$Elements" => {
                let l = lines.next_line()?;
                let n: usize = l.parse().map_err(|_| lines.err("bad element count"))?;
                for _ in 0..n {
                    let l = lines.next_line()?;
                    let v: Vec<usize> = lines.numbers(l)?;
                    if v.len() < 3 || v.len() < 3 + v[2] {
                        return Err(lines.err("truncated element record"));
                    }
                    let (ty, ntags) = (v[1], v[2]);
                    let tags = v[3..3 + ntags].to_vec();
                    let nodes = v[3 + ntags..].to_vec();
                    raw.push((ty, tags, nodes, lines.line));
                }
                lines.expect("$EndElements")?;
            }
            other if other.starts_with('$') => {
                // skip unknown section
                let end = format!("$End{}", &other[1..]);
                while lines.next_line()? != end {}
            }
            other => return Err(lines.err(format!("unexpected content `{other}`"))),
        }
    }
    if !seen_format {
        return Err(Error::Parse { line: 1, msg: "missing $MeshFormat".into() });
    }

    let mut tets = Vec::new();
    let mut labels = Vec::new();
    let mut facets = Vec::new();
    let mut repaired = 0;
    for (ty, tags, nodes, line) in raw {
        let map = |ids: &[usize]| -> Result<Vec<usize>> {
            ids.iter()
                .map(|id| {
                    node_index
                        .get(id)
                        .copied()
                        .ok_or_else(|| Error::Parse { line, msg: format!("unknown node {id}") })
                })
                .collect()
        };
        match ty {
            4 => {
                if nodes.len() != 4 {
                    return Err(Error::Parse { line, msg: "tetrahedron needs 4 nodes".into() });
                }
                let Some(&label) = tags.first() else {
                    return Err(Error::UntaggedElement(format!("tetrahedron at line {line}")));
                };
                let v = map(&nodes)?;
                let mut t = [v[0], v[1], v[2], v[3]];
                if signed_volume_of(t.map(|i| vertices[i])) < 0.0 {
                    t.swap(2, 3);
                    repaired += 1;
                }
                tets.push(t);
                labels.push(label);
            }
            2 => {
                if nodes.len() != 3 {
                    return Err(Error::Parse { line, msg: "triangle needs 3 nodes".into() });
                }
                let tag = match tags.first() {
                    Some(&t) if t == sigma_id => FacetTag::Sigma,
                    Some(&t) if t == rest_id => FacetTag::Rest,
                    _ => return Err(Error::UntaggedElement(format!("triangle at line {line}"))),
                };
                let v = map(&nodes)?;
                facets.push(BoundaryFacet { vertices: [v[0], v[1], v[2]], tag });
            }
            _ => {}
        }
    }
    if tets.is_empty() {
        return Err(Error::Parse { line: lines.line, msg: "no tetrahedra".into() });
    }
    if !facets.iter().any(|f| f.tag == FacetTag::Sigma) {
        return Err(Error::UntaggedElement("no SIGMA-tagged boundary facet".into()));
    }
    if repaired > 0 {
        log::warn!("repaired orientation of {repaired} tetrahedra");
    }
    Ok((Mesh::from_parts(vertices, tets, labels, facets), IngestReport { repaired_tets: repaired }))
}
