//! Degree-(2,1) Taylor-Hood degree-of-freedom maps over a mesh.

use crate::mesh::Mesh;
use std::collections::BTreeSet;
use std::sync::Arc;

/// Velocity dofs: two components per quadratic node (vertices first, then
/// edge midpoints), dof = 2 * node + component. Pressure dofs: one per
/// vertex.
#[derive(Clone, Debug)]
pub struct FESpace {
    mesh: Arc<Mesh>,
    /// Per triangle: [v0, v1, v2, m01, m12, m20] quadratic node ids.
    elem_nodes: Vec<[usize; 6]>,
    node_coords: Vec<[f64; 2]>,
    dirichlet_dofs: Vec<usize>,
    is_dirichlet: Vec<bool>,
    is_dirichlet_vertex: Vec<bool>,
    noslip_tags: BTreeSet<i32>,
}

impl FESpace {
    pub fn new(mesh: Arc<Mesh>, noslip_tags: &BTreeSet<i32>) -> Self {
        let nv = mesh.vertices().len();
        let elem_nodes = mesh
            .triangles()
            .iter()
            .map(|t| {
                [
                    t[0],
                    t[1],
                    t[2],
                    nv + mesh.edge_id(t[0], t[1]).unwrap(),
                    nv + mesh.edge_id(t[1], t[2]).unwrap(),
                    nv + mesh.edge_id(t[2], t[0]).unwrap(),
                ]
            })
            .collect();
        let node_coords = mesh.quadratic_node_coords();
        let n_nodes = node_coords.len();

        let mut dirichlet_nodes = vec![false; n_nodes];
        let mut dirichlet_vertex = vec![false; nv];
        for be in mesh.boundary_edges() {
            if noslip_tags.contains(&be.tag) {
                let [a, b] = be.vertices;
                dirichlet_nodes[a] = true;
                dirichlet_nodes[b] = true;
                dirichlet_nodes[nv + mesh.edge_id(a, b).unwrap()] = true;
                dirichlet_vertex[a] = true;
                dirichlet_vertex[b] = true;
            }
        }
        let mut is_dirichlet = vec![false; 2 * n_nodes];
        let mut dirichlet_dofs = Vec::new();
        for (node, &on) in dirichlet_nodes.iter().enumerate() {
            if on {
                for c in 0..2 {
                    is_dirichlet[2 * node + c] = true;
                    dirichlet_dofs.push(2 * node + c);
                }
            }
        }

        FESpace {
            mesh,
            elem_nodes,
            node_coords,
            dirichlet_dofs,
            is_dirichlet,
            is_dirichlet_vertex: dirichlet_vertex,
            noslip_tags: noslip_tags.clone(),
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    /// Number of velocity dofs, 2 x (vertices + edges).
    pub fn n_velocity_dofs(&self) -> usize {
        2 * self.node_coords.len()
    }

    /// Number of pressure dofs (vertices).
    pub fn n_pressure_dofs(&self) -> usize {
        self.mesh.vertices().len()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn node_coords(&self) -> &[[f64; 2]] {
        &self.node_coords
    }

    pub fn elem_nodes(&self, elem: usize) -> [usize; 6] {
        self.elem_nodes[elem]
    }

    pub fn n_elems(&self) -> usize {
        self.elem_nodes.len()
    }

    pub fn dirichlet_dofs(&self) -> &[usize] {
        &self.dirichlet_dofs
    }

    pub fn is_dirichlet_dof(&self, dof: usize) -> bool {
        self.is_dirichlet[dof]
    }

    /// Vertex lies on a tagged boundary edge (P1 Dirichlet set, used by the
    /// equal-order negative control).
    pub fn is_dirichlet_vertex(&self, v: usize) -> bool {
        self.is_dirichlet_vertex[v]
    }

    pub fn noslip_tags(&self) -> &BTreeSet<i32> {
        &self.noslip_tags
    }

    /// Zero out the Dirichlet dofs of a velocity coefficient vector.
    pub fn project_homogeneous(&self, v: &mut [f64]) {
        for &d in &self.dirichlet_dofs {
            v[d] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_square;

    #[test]
    fn dof_counts_match_mesh_entities() {
        let mesh = Arc::new(build_structured_square(3).unwrap());
        let tags: BTreeSet<i32> = mesh.boundary_tags().into_iter().collect();
        let space = FESpace::new(Arc::clone(&mesh), &tags);
        let nv = mesh.vertices().len();
        let ne = mesh.edges().len();
        assert_eq!(space.n_velocity_dofs(), 2 * (nv + ne));
        assert_eq!(space.n_pressure_dofs(), nv);
    }

    #[test]
    fn dirichlet_dofs_lie_on_tagged_edges() {
        let mesh = Arc::new(build_structured_square(3).unwrap());
        let tags: BTreeSet<i32> = mesh.boundary_tags().into_iter().collect();
        let space = FESpace::new(Arc::clone(&mesh), &tags);
        for &dof in space.dirichlet_dofs() {
            let p = space.node_coords()[dof / 2];
            let on = p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0;
            assert!(on, "dirichlet dof at {p:?} not on the boundary");
        }
        // interior nodes are free: (n-1)^2 vertices + interior edges
        let boundary_nodes = space.dirichlet_dofs().len() / 2;
        assert_eq!(boundary_nodes, 4 * 3 + 4 * 3); // 12 boundary vertices + 12 boundary midpoints
    }
}
