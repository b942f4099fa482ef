//! Symmetric Dirichlet elimination: constrained rows and columns are removed
//! and their contribution moved to the right-hand side, so SPD blocks stay
//! SPD on the reduced index set.

use super::{FemError, FESpace};
use crate::linalg::CsrMat;

/// Index maps between full velocity dofs and the interior (non-Dirichlet)
/// subset, plus the boundary values for the eliminated dofs.
#[derive(Clone, Debug)]
pub struct DirichletReducer {
    interior: Vec<usize>,
    full_to_interior: Vec<Option<usize>>,
    values: Vec<f64>,
    n_full: usize,
}

impl DirichletReducer {
    /// Homogeneous no-slip reduction.
    pub fn homogeneous(space: &FESpace) -> Self {
        Self::with_node_values(space, |_| [0.0, 0.0])
    }

    /// Boundary values from a closure over node coordinates (inhomogeneous
    /// Dirichlet data, e.g. manufactured solutions).
    pub fn with_node_values(space: &FESpace, g: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let n_full = space.n_velocity_dofs();
        let mut values = vec![0.0; n_full];
        let mut full_to_interior = vec![None; n_full];
        let mut interior = Vec::with_capacity(n_full);
        for dof in 0..n_full {
            if space.is_dirichlet_dof(dof) {
                let v = g(space.node_coords()[dof / 2]);
                values[dof] = v[dof % 2];
            } else {
                full_to_interior[dof] = Some(interior.len());
                interior.push(dof);
            }
        }
        DirichletReducer { interior, full_to_interior, values, n_full }
    }

    /// Explicit per-dof boundary values; rejects values on non-Dirichlet dofs.
    pub fn with_dof_values(
        space: &FESpace,
        dof_values: &[(usize, f64)],
    ) -> Result<Self, FemError> {
        let mut red = Self::homogeneous(space);
        for &(dof, v) in dof_values {
            if !space.is_dirichlet_dof(dof) {
                return Err(FemError::NonBoundaryDof(dof));
            }
            red.values[dof] = v;
        }
        Ok(red)
    }

    /// Replace the boundary values (time-dependent data) without rebuilding
    /// the index maps.
    pub fn update_node_values(&mut self, space: &FESpace, g: impl Fn([f64; 2]) -> [f64; 2]) {
        for &dof in space.dirichlet_dofs() {
            let v = g(space.node_coords()[dof / 2]);
            self.values[dof] = v[dof % 2];
        }
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_full(&self) -> usize {
        self.n_full
    }

    pub fn interior_dofs(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_values(&self) -> &[f64] {
        &self.values
    }

    /// K restricted to interior rows and columns.
    pub fn reduce_square(&self, k: &CsrMat) -> CsrMat {
        k.submatrix(&self.interior, &self.full_to_interior, self.interior.len())
    }

    /// Interior part of rhs - K_ib g_b for a square velocity block.
    pub fn reduce_rhs(&self, k: &CsrMat, rhs: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.interior.len());
        for &dof in &self.interior {
            let mut v = rhs[dof];
            for (c, kv) in k.row(dof) {
                if self.full_to_interior[c].is_none() {
                    v -= kv * self.values[c];
                }
            }
            out.push(v);
        }
        out
    }

    /// Interior part of a bare vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&d| full[d]).collect()
    }

    /// Rectangular block (rows kept, velocity columns reduced).
    pub fn reduce_columns(&self, b: &CsrMat) -> CsrMat {
        let all_rows: Vec<usize> = (0..b.nrows()).collect();
        b.submatrix(&all_rows, &self.full_to_interior, self.interior.len())
    }

    /// -B_ib g_b: right-hand side correction for a rectangular block.
    pub fn column_rhs_correction(&self, b: &CsrMat) -> Vec<f64> {
        let mut out = vec![0.0; b.nrows()];
        for r in 0..b.nrows() {
            for (c, v) in b.row(r) {
                if self.full_to_interior[c].is_none() {
                    out[r] -= v * self.values[c];
                }
            }
        }
        out
    }

    /// Extend an interior solution by the boundary values.
    pub fn extend(&self, interior: &[f64]) -> Vec<f64> {
        assert_eq!(interior.len(), self.interior.len());
        let mut full = self.values.clone();
        for (i, &dof) in self.interior.iter().enumerate() {
            full[dof] = interior[i];
        }
        full
    }
}
