//! GMSH ASCII v2.2 reader and writer. Supported elements: 2-node lines
//! (boundary edges, physical tag required), 3-node triangles, and points
//! (skipped). Version 4 files must be re-exported as 2.2.

use super::{BoundaryEdge, Mesh, MeshError};
use std::collections::HashMap;

struct Lines<'a> {
    inner: std::str::Lines<'a>,
    lineno: usize,
}

impl<'a> Lines<'a> {
    fn next_nonempty(&mut self) -> Option<(usize, &'a str)> {
        for line in self.inner.by_ref() {
            self.lineno += 1;
            let t = line.trim();
            if !t.is_empty() {
                return Some((self.lineno, t));
            }
        }
        None
    }
}

fn parse_err(line: usize, detail: impl Into<String>) -> MeshError {
    MeshError::Parse { line, detail: detail.into() }
}

pub fn parse_gmsh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines { inner: text.lines(), lineno: 0 };
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut id_map: HashMap<usize, usize> = HashMap::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut boundary: Vec<BoundaryEdge> = Vec::new();
    let mut seen_nodes = false;
    let mut seen_elements = false;

    while let Some((lineno, line)) = lines.next_nonempty() {
        let section = line
            .strip_prefix('$')
            .ok_or_else(|| MeshError::MalformedSection {
                line: lineno,
                detail: format!("expected a $Section header, found {line:?}"),
            })?
            .to_string();
        match section.as_str() {
            "MeshFormat" => {
                let (ln, body) = lines
                    .next_nonempty()
                    .ok_or_else(|| parse_err(lineno, "unterminated $MeshFormat"))?;
                let mut it = body.split_whitespace();
                let version = it.next().unwrap_or("").to_string();
                if version != "2.2" {
                    return Err(MeshError::UnsupportedVersion { line: ln, version });
                }
                let file_type = it.next().unwrap_or("");
                if file_type != "0" {
                    return Err(parse_err(ln, "binary GMSH files are not supported"));
                }
                expect_end(&mut lines, "MeshFormat")?;
            }
            "Nodes" => {
                seen_nodes = true;
                let (ln, body) =
                    lines.next_nonempty().ok_or_else(|| parse_err(lineno, "unterminated $Nodes"))?;
                let count: usize =
                    body.parse().map_err(|_| parse_err(ln, format!("invalid node count {body:?}")))?;
                for _ in 0..count {
                    let (ln, body) =
                        lines.next_nonempty().ok_or_else(|| parse_err(ln, "truncated $Nodes"))?;
                    let mut it = body.split_whitespace();
                    let id: usize = next_num(&mut it, ln, "node id")?;
                    let x: f64 = next_num(&mut it, ln, "x coordinate")?;
                    let y: f64 = next_num(&mut it, ln, "y coordinate")?;
                    id_map.insert(id, vertices.len());
                    vertices.push([x, y]);
                }
                expect_end(&mut lines, "Nodes")?;
            }
            "Elements" => {
                seen_elements = true;
                let (ln, body) = lines
                    .next_nonempty()
                    .ok_or_else(|| parse_err(lineno, "unterminated $Elements"))?;
                let count: usize = body
                    .parse()
                    .map_err(|_| parse_err(ln, format!("invalid element count {body:?}")))?;
                for _ in 0..count {
                    let (ln, body) =
                        lines.next_nonempty().ok_or_else(|| parse_err(ln, "truncated $Elements"))?;
                    let mut it = body.split_whitespace();
                    let _id: usize = next_num(&mut it, ln, "element id")?;
                    let etype: usize = next_num(&mut it, ln, "element type")?;
                    let ntags: usize = next_num(&mut it, ln, "tag count")?;
                    let mut tags = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        tags.push(next_num::<i32>(&mut it, ln, "tag")?);
                    }
                    match etype {
                        1 => {
                            let a = node_ref(&mut it, &id_map, ln)?;
                            let b = node_ref(&mut it, &id_map, ln)?;
                            let tag = *tags
                                .first()
                                .ok_or_else(|| parse_err(ln, "boundary line without physical tag"))?;
                            boundary.push(BoundaryEdge { vertices: [a, b], tag });
                        }
                        2 => {
                            let a = node_ref(&mut it, &id_map, ln)?;
                            let b = node_ref(&mut it, &id_map, ln)?;
                            let c = node_ref(&mut it, &id_map, ln)?;
                            triangles.push([a, b, c]);
                        }
                        15 => {} // point element, irrelevant here
                        other => {
                            return Err(parse_err(ln, format!("unsupported element type {other}")))
                        }
                    }
                }
                expect_end(&mut lines, "Elements")?;
            }
            other if other.starts_with("End") => {
                return Err(MeshError::MalformedSection {
                    line: lineno,
                    detail: format!("unmatched ${other}"),
                });
            }
            other => {
                // skip unknown sections such as $PhysicalNames
                let end = format!("$End{other}");
                loop {
                    match lines.next_nonempty() {
                        Some((_, l)) if l == end => break,
                        Some(_) => {}
                        None => {
                            return Err(MeshError::MalformedSection {
                                line: lineno,
                                detail: format!("section ${other} is never closed"),
                            })
                        }
                    }
                }
            }
        }
    }

    if !seen_nodes || !seen_elements {
        return Err(MeshError::MalformedSection {
            line: lines.lineno,
            detail: "missing $Nodes or $Elements section".into(),
        });
    }
    Mesh::new(vertices, triangles, boundary)
}

fn expect_end(lines: &mut Lines, name: &str) -> Result<(), MeshError> {
    let want = format!("$End{name}");
    match lines.next_nonempty() {
        Some((_, l)) if l == want => Ok(()),
        Some((ln, l)) => Err(MeshError::MalformedSection {
            line: ln,
            detail: format!("expected {want}, found {l:?}"),
        }),
        None => Err(MeshError::MalformedSection {
            line: lines.lineno,
            detail: format!("expected {want}, found end of input"),
        }),
    }
}

fn next_num<T: std::str::FromStr>(
    it: &mut std::str::SplitWhitespace,
    line: usize,
    what: &str,
) -> Result<T, MeshError> {
    it.next()
        .ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what}")))
}

fn node_ref(
    it: &mut std::str::SplitWhitespace,
    id_map: &HashMap<usize, usize>,
    line: usize,
) -> Result<usize, MeshError> {
    let id: usize = next_num(it, line, "node reference")?;
    id_map.get(&id).copied().ok_or(MeshError::UnknownNode { line, node: id })
}

/// Serialize to GMSH ASCII v2.2. Coordinates are written with 17 significant
/// digits so `parse_gmsh(write_gmsh(m))` reproduces them exactly.
pub fn write_gmsh(mesh: &Mesh) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    writeln!(s, "{}", mesh.vertices().len()).unwrap();
    for (i, v) in mesh.vertices().iter().enumerate() {
        writeln!(s, "{} {:.16e} {:.16e} 0", i + 1, v[0], v[1]).unwrap();
    }
    s.push_str("$EndNodes\n$Elements\n");
    writeln!(s, "{}", mesh.boundary_edges().len() + mesh.triangles().len()).unwrap();
    let mut eid = 1;
    for be in mesh.boundary_edges() {
        writeln!(
            s,
            "{eid} 1 2 {} {} {} {}",
            be.tag,
            be.tag,
            be.vertices[0] + 1,
            be.vertices[1] + 1
        )
        .unwrap();
        eid += 1;
    }
    for t in mesh.triangles() {
        writeln!(s, "{eid} 2 2 0 1 {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
        eid += 1;
    }
    s.push_str("$EndElements\n");
    s
}
