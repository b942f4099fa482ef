//! Legacy ASCII VTK snapshots: the quadratic velocity is written as point
//! data over a once-refined linear mesh (each P2 triangle splits into four
//! linear ones through its midpoint nodes).

use super::{io_err, IoError};
use crate::fem::FESpace;
use crate::solver::State;
use std::io::Write;
use std::path::Path;

pub fn write_snapshot(space: &FESpace, state: &State, path: &Path) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mesh = space.mesh();
    let n_nodes = space.n_nodes();
    let nv = mesh.vertices().len();

    let mut w = || -> std::io::Result<()> {
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "halfeq snapshot step {} t {:.16e}", state.n, state.t)?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(out, "POINTS {n_nodes} double")?;
        for p in space.node_coords() {
            writeln!(out, "{:.16e} {:.16e} 0", p[0], p[1])?;
        }
        let n_cells = 4 * mesh.triangles().len();
        writeln!(out, "CELLS {n_cells} {}", 4 * n_cells)?;
        for e in 0..space.n_elems() {
            let [v0, v1, v2, m01, m12, m20] = space.elem_nodes(e);
            for tri in [[v0, m01, m20], [v1, m12, m01], [v2, m20, m12], [m01, m12, m20]] {
                writeln!(out, "3 {} {} {}", tri[0], tri[1], tri[2])?;
            }
        }
        writeln!(out, "CELL_TYPES {n_cells}")?;
        for _ in 0..n_cells {
            writeln!(out, "5")?;
        }
        writeln!(out, "POINT_DATA {n_nodes}")?;
        writeln!(out, "VECTORS velocity double")?;
        for node in 0..n_nodes {
            writeln!(out, "{:.16e} {:.16e} 0", state.v[2 * node], state.v[2 * node + 1])?;
        }
        writeln!(out, "SCALARS pressure double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        // P1 pressure: vertex values directly, midpoints from edge endpoints
        for node in 0..n_nodes {
            let val = if node < nv {
                state.p[node]
            } else {
                let [a, b] = mesh.edges()[node - nv];
                0.5 * (state.p[a] + state.p[b])
            };
            writeln!(out, "{val:.16e}")?;
        }
        if let Some(k) = &state.k {
            writeln!(out, "FIELD run_scalars 1")?;
            writeln!(out, "k 1 1 double")?;
            writeln!(out, "{:.16e}", k.value)?;
        }
        Ok(())
    };
    w().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_square;
    use std::collections::BTreeSet;
    use std::sync::Arc;

    #[test]
    fn snapshot_is_wellformed_and_k_is_optional() {
        let mesh = Arc::new(build_structured_square(2).unwrap());
        let tags: BTreeSet<i32> = mesh.boundary_tags().into_iter().collect();
        let space = FESpace::new(mesh, &tags);
        let mut state = State::resting(&space);
        let dir = tempfile::tempdir().unwrap();

        let p1 = dir.path().join("a.vtk");
        write_snapshot(&space, &state, &p1).unwrap();
        let text = std::fs::read_to_string(&p1).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0"));
        assert!(text.contains("VECTORS velocity double"));
        assert!(text.contains("SCALARS pressure double 1"));
        assert!(!text.contains("\nk 1 1 double"), "k must be absent before activation");
        let cells = 4 * space.n_elems();
        assert!(text.contains(&format!("CELLS {cells} {}", 4 * cells)));

        state.k = Some(crate::model::KState { value: 3.3e-5, time: 1.0 });
        let p2 = dir.path().join("b.vtk");
        write_snapshot(&space, &state, &p2).unwrap();
        assert!(std::fs::read_to_string(&p2).unwrap().contains("\nk 1 1 double"));
    }
}
