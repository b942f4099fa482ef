//! Taylor-Hood (P2 velocity / P1 pressure) finite element machinery: spaces,
//! quadrature, operator assembly, Dirichlet elimination and norm evaluation.

pub mod assemble;
pub mod basis;
mod coefficient;
mod dirichlet;
pub mod quadrature;
mod space;

pub use assemble::{
    assemble_diffusion, assemble_divergence, assemble_divergence_p1, assemble_load, assemble_mass,
    assemble_mass_p1, assemble_trilinear, assembly_rule, eval_velocity_at, interpolate_pressure,
    interpolate_velocity, norms, pressure_mass, pressure_mean_vector, scalar_mass_p1,
    scalar_stiffness_p1, velocity_error_vs_exact, vector_stiffness_p1, weighted_dissipation,
    Norms,
};
pub use coefficient::CoefficientField;
pub use dirichlet::DirichletReducer;
pub use quadrature::{quadrature_rule, QuadratureRule, ASSEMBLY_ORDER};
pub use space::FESpace;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("unsupported quadrature order {0} (supported: 1..=6)")]
    UnsupportedQuadratureOrder(usize),
    #[error("negative coefficient {value:.3e} at quadrature point {point} of element {element}")]
    NegativeCoefficient { element: usize, point: usize, value: f64 },
    #[error("coefficient vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dof {0} is not a Dirichlet dof")]
    NonBoundaryDof(usize),
}

/// Gradient form used in the viscous term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViscousForm {
    /// (grad v, grad w) — the analyzed scheme.
    FullGradient,
    /// 2 (sym grad v, sym grad w) — the model's constitutive form.
    SymmetricGradient,
}

/// Affine geometry of one triangle.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ElemGeom {
    pub v0: [f64; 2],
    pub jac: [[f64; 2]; 2],
    pub inv_jac_t: [[f64; 2]; 2],
    pub det: f64,
}

impl ElemGeom {
    pub fn new(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Self {
        let jac = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv_jac_t =
            [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        ElemGeom { v0: a, jac, inv_jac_t, det }
    }

    #[inline]
    pub fn map(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.v0[0] + self.jac[0][0] * p[0] + self.jac[0][1] * p[1],
            self.v0[1] + self.jac[1][0] * p[0] + self.jac[1][1] * p[1],
        ]
    }

    /// Push a reference gradient to physical coordinates.
    #[inline]
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_jac_t[0][0] * g[0] + self.inv_jac_t[0][1] * g[1],
            self.inv_jac_t[1][0] * g[0] + self.inv_jac_t[1][1] * g[1],
        ]
    }
}

/// Shape values and reference gradients tabulated at the quadrature points.
#[derive(Clone, Debug)]
pub(crate) struct BasisTable {
    pub p2_vals: Vec<[f64; 6]>,
    pub p2_grads: Vec<[[f64; 2]; 6]>,
    pub p1_vals: Vec<[f64; 3]>,
}

impl BasisTable {
    pub fn new(rule: &QuadratureRule) -> Self {
        BasisTable {
            p2_vals: rule.points.iter().map(|p| basis::p2_values(p[0], p[1])).collect(),
            p2_grads: rule.points.iter().map(|p| basis::p2_grads(p[0], p[1])).collect(),
            p1_vals: rule.points.iter().map(|p| basis::p1_values(p[0], p[1])).collect(),
        }
    }
}
