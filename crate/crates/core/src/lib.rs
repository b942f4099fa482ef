//! 2D incompressible-flow solver built on Taylor-Hood (P2-P1) finite
//! elements, with a linearly implicit Backward-Euler stepper coupled to a
//! scalar turbulent-kinetic-energy ODE, plus the verification machinery
//! (energy budgets, inf-sup estimates, manufactured solutions, rate tables)
//! used to check it.

pub mod diagnostics;
pub mod driver;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod solver;
pub mod verify;

pub use fem::{CoefficientField, FESpace, ViscousForm};
pub use mesh::{Mesh, WallDistanceField};
pub use model::{Damping, KState, ModelParams};
pub use solver::{State, StepReport, Stepper};
