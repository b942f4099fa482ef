//! Triangulations with tagged boundary loops: GMSH ingestion, built-in
//! generators, geometric metadata, and wall-distance fields.

mod generators;
mod gmsh;
mod wall;

pub use generators::{build_offset_circles, build_structured_square, offset_circles_distance, OFFSET_CIRCLES_GEO};
pub use gmsh::{parse_gmsh, write_gmsh};
pub use wall::{compute_wall_distance, compute_wall_distance_analytic, WallDistanceField};

use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: malformed section: {detail}")]
    MalformedSection { line: usize, detail: String },
    #[error("line {line}: unsupported GMSH format version {version} (only ASCII 2.2 is supported)")]
    UnsupportedVersion { line: usize, version: String },
    #[error("line {line}: element references unknown node {node}")]
    UnknownNode { line: usize, node: usize },
    #[error("line {line}: parse error: {detail}")]
    Parse { line: usize, detail: String },
    #[error("mesh contains no triangles")]
    EmptyTriangleSet,
    #[error("triangle {0} is degenerate (zero signed area)")]
    DegenerateTriangle(usize),
    #[error("triangle {0} references vertex {1} out of range")]
    VertexOutOfRange(usize, usize),
    #[error("tagged edge ({0}, {1}) is adjacent to {2} triangles, expected exactly 1")]
    EdgeNotOnBoundary(usize, usize, usize),
    #[error("boundary vertex {0} has degree {1}; boundary edges must form closed loops")]
    OpenBoundaryLoop(usize, usize),
    #[error("{0} topological boundary edges carry no tag")]
    UntaggedBoundary(usize),
    #[error("subdivision count must be at least 1")]
    ZeroSubdivision,
    #[error("target size {0} out of range (expected 0 < lc <= 0.5)")]
    BadTargetSize(f64),
    #[error("no boundary edge carries a no-slip tag")]
    EmptyNoSlipSet,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: i32,
}

/// Immutable triangulation. Triangles are stored counterclockwise; input
/// triangles with negative signed area are reoriented on construction.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    /// Unique undirected edges (sorted vertex pairs) in discovery order.
    edges: Vec<[usize; 2]>,
    edge_index: HashMap<(usize, usize), usize>,
    h_max: f64,
    h_min: f64,
    area: f64,
}

impl Mesh {
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::EmptyTriangleSet);
        }
        let mut triangles = triangles;
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange(t, v));
                }
            }
            let a = signed_area(&vertices, *tri);
            if a < 0.0 {
                tri.swap(1, 2);
            } else if a == 0.0 {
                return Err(MeshError::DegenerateTriangle(t));
            }
        }

        // unique edge table + adjacent triangle counts
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut adjacency: Vec<usize> = Vec::new();
        for tri in &triangles {
            for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                let key = (a.min(b), a.max(b));
                match edge_index.get(&key) {
                    Some(&e) => adjacency[e] += 1,
                    None => {
                        edge_index.insert(key, edges.len());
                        edges.push([key.0, key.1]);
                        adjacency.push(1);
                    }
                }
            }
        }

        // every tagged edge lies on the topological boundary
        let mut tagged = vec![false; edges.len()];
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for be in &boundary_edges {
            let key = (be.vertices[0].min(be.vertices[1]), be.vertices[0].max(be.vertices[1]));
            let e = *edge_index
                .get(&key)
                .ok_or(MeshError::EdgeNotOnBoundary(key.0, key.1, 0))?;
            if adjacency[e] != 1 {
                return Err(MeshError::EdgeNotOnBoundary(key.0, key.1, adjacency[e]));
            }
            tagged[e] = true;
            *degree.entry(key.0).or_insert(0) += 1;
            *degree.entry(key.1).or_insert(0) += 1;
        }
        for (&v, &d) in &degree {
            if d != 2 {
                return Err(MeshError::OpenBoundaryLoop(v, d));
            }
        }
        let untagged = (0..edges.len()).filter(|&e| adjacency[e] == 1 && !tagged[e]).count();
        if untagged > 0 {
            return Err(MeshError::UntaggedBoundary(untagged));
        }

        let mut h_max = 0.0f64;
        let mut h_min = f64::INFINITY;
        let mut area = 0.0;
        for tri in &triangles {
            let h = longest_edge(&vertices, *tri);
            h_max = h_max.max(h);
            h_min = h_min.min(h);
            area += signed_area(&vertices, *tri);
        }

        Ok(Mesh { vertices, triangles, boundary_edges, edges, edge_index, h_max, h_min, area })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    /// Maximum triangle diameter (longest edge over all triangles).
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Quasi-uniformity metadata: largest / smallest triangle diameter.
    pub fn size_ratio(&self) -> f64 {
        self.h_max / self.h_min
    }

    /// Domain area |Omega| of the triangulated polygon.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, self.triangles[t])
    }

    pub fn boundary_tags(&self) -> Vec<i32> {
        let mut tags: Vec<i32> = self.boundary_edges.iter().map(|b| b.tag).collect();
        tags.sort_unstable();
        tags.dedup();
        tags
    }

    /// Locations of the quadratic (vertex + edge-midpoint) nodes, in the
    /// canonical order: all vertices first, then edge midpoints.
    pub fn quadratic_node_coords(&self) -> Vec<[f64; 2]> {
        let mut coords = self.vertices.clone();
        coords.reserve(self.edges.len());
        for e in &self.edges {
            let a = self.vertices[e[0]];
            let b = self.vertices[e[1]];
            coords.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
        }
        coords
    }

    pub fn n_quadratic_nodes(&self) -> usize {
        self.vertices.len() + self.edges.len()
    }
}

pub(crate) fn signed_area(vertices: &[[f64; 2]], tri: [usize; 3]) -> f64 {
    let [a, b, c] = tri;
    let (ax, ay) = (vertices[a][0], vertices[a][1]);
    let (bx, by) = (vertices[b][0], vertices[b][1]);
    let (cx, cy) = (vertices[c][0], vertices[c][1]);
    0.5 * ((bx - ax) * (cy - ay) - (cx - ax) * (by - ay))
}

fn longest_edge(vertices: &[[f64; 2]], tri: [usize; 3]) -> f64 {
    let mut h: f64 = 0.0;
    for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
        let dx = vertices[a][0] - vertices[b][0];
        let dy = vertices[a][1] - vertices[b][1];
        h = h.max((dx * dx + dy * dy).sqrt());
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_triangle() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![
                BoundaryEdge { vertices: [0, 1], tag: 1 },
                BoundaryEdge { vertices: [1, 2], tag: 1 },
                BoundaryEdge { vertices: [2, 0], tag: 1 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_metrics() {
        let m = unit_triangle();
        assert_eq!(m.vertices().len(), 3);
        assert_eq!(m.triangles().len(), 1);
        assert!((m.area() - 0.5).abs() < 1e-15);
        assert!((m.h_max() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clockwise_triangle_is_reoriented() {
        let m = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
            vec![
                BoundaryEdge { vertices: [0, 1], tag: 1 },
                BoundaryEdge { vertices: [1, 2], tag: 1 },
                BoundaryEdge { vertices: [2, 0], tag: 1 },
            ],
        )
        .unwrap();
        assert!(m.triangle_area(0) > 0.0);
    }

    #[test]
    fn untagged_boundary_is_rejected() {
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![
                BoundaryEdge { vertices: [0, 1], tag: 1 },
                BoundaryEdge { vertices: [1, 2], tag: 1 },
            ],
        )
        .unwrap_err();
        match err {
            // the two tagged edges leave vertices 0 and 2 with degree 1
            MeshError::OpenBoundaryLoop(_, 1) => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn interior_tagged_edge_is_rejected() {
        // two triangles sharing the diagonal; tag the diagonal
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![BoundaryEdge { vertices: [0, 2], tag: 1 }],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::EdgeNotOnBoundary(0, 2, 2)));
    }
}
