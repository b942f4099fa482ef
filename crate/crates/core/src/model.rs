//! Model parameters, eddy-viscosity coefficient construction, and the scalar
//! turbulent-kinetic-energy updates.
//!
//! The kinetic-energy proxy k is a single scalar per run (the model averages
//! it in space); its ODE is dk/dt + (sqrt(2)/2) k / tau = eps * k with
//! eps = (tau / |Omega|) * integral of mu(y) |grad v|^2.

use crate::fem::{assembly_rule, CoefficientField, FESpace};
use crate::mesh::WallDistanceField;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("negative turbulent kinetic energy {0}")]
    NegativeK(f64),
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
}

/// Damping-function selector for the eddy viscosity nu_T = mu(y) k tau.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Damping {
    /// mu(y) = mu: spatially constant, the form the scheme analysis uses.
    Constant,
    /// mu(y) = mu (y/L)^2: the model's quadratic near-wall damping.
    ModelQuadratic,
    /// mu(y) = sqrt(2) mu (kappa y / L)^2: the benchmark's variant.
    TestVariant,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModelParams {
    /// Kinematic viscosity.
    pub nu: f64,
    /// Model time scale.
    pub tau: f64,
    /// Calibration constant (0.55).
    pub mu: f64,
    /// von Karman constant (0.41).
    pub kappa: f64,
    /// Domain diameter scale L.
    pub length_scale: f64,
    /// Velocity scale U.
    pub velocity_scale: f64,
    /// Model activation time.
    pub t_star: f64,
    pub damping: Damping,
}

impl Default for ModelParams {
    /// The offset-circles benchmark parameters.
    fn default() -> Self {
        ModelParams {
            nu: 1e-4,
            tau: 0.1,
            mu: 0.55,
            kappa: 0.41,
            length_scale: 1.0,
            velocity_scale: 1.0,
            t_star: 1.0,
            damping: Damping::TestVariant,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("nu", self.nu),
            ("tau", self.tau),
            ("mu", self.mu),
            ("kappa", self.kappa),
            ("length_scale", self.length_scale),
            ("velocity_scale", self.velocity_scale),
        ] {
            if !(value > 0.0) {
                return Err(ModelError::NonPositiveParameter { name, value });
            }
        }
        if self.t_star < 0.0 {
            return Err(ModelError::NonPositiveParameter { name: "t_star", value: self.t_star });
        }
        Ok(())
    }

    pub fn reynolds(&self) -> f64 {
        self.velocity_scale * self.length_scale / self.nu
    }

    /// Damping weight mu(y) for the selected variant.
    pub fn damping_weight(&self, y: f64) -> f64 {
        match self.damping {
            Damping::Constant => self.mu,
            Damping::ModelQuadratic => {
                let s = y / self.length_scale;
                self.mu * s * s
            }
            Damping::TestVariant => {
                let s = self.kappa * y / self.length_scale;
                std::f64::consts::SQRT_2 * self.mu * s * s
            }
        }
    }
}

/// Turbulent kinetic energy proxy with the time it refers to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KState {
    pub value: f64,
    pub time: f64,
}

/// Damping weight mu(y) sampled at the assembly quadrature points; computed
/// once per run and rescaled by k tau each step.
#[derive(Clone, Debug)]
pub struct DampingField {
    weights: CoefficientField,
}

impl DampingField {
    pub fn new(space: &FESpace, wall: &WallDistanceField, params: &ModelParams) -> Self {
        let rule = assembly_rule();
        let weights = match params.damping {
            Damping::Constant => CoefficientField::constant(params.mu),
            _ => {
                let p = *params;
                CoefficientField::from_wall_fn(space, &rule, wall, move |y| p.damping_weight(y))
            }
        };
        DampingField { weights }
    }

    pub fn weights(&self) -> &CoefficientField {
        &self.weights
    }

    /// Coefficient nu + nu_T(x) with nu_T = mu(y) k tau; before the model
    /// activation time the eddy viscosity is identically zero.
    pub fn viscosity(&self, params: &ModelParams, k: Option<&KState>) -> Result<CoefficientField, ModelError> {
        match k {
            None => Ok(CoefficientField::constant(params.nu)),
            Some(ks) => {
                if ks.value < 0.0 {
                    return Err(ModelError::NegativeK(ks.value));
                }
                if ks.time < params.t_star {
                    return Ok(CoefficientField::constant(params.nu));
                }
                Ok(self.weights.affine(ks.value * params.tau, params.nu))
            }
        }
    }

    /// The factor multiplying k^n on the right side of the k-equation:
    /// eps = (tau / |Omega|) * integral of mu(y) |grad v_h|^2.
    pub fn dissipation_coefficient(&self, space: &FESpace, v: &[f64], params: &ModelParams) -> f64 {
        let integral = crate::fem::weighted_dissipation(space, v, &self.weights);
        params.tau * integral / space.mesh().area()
    }
}

/// Spec-named wrapper: eddy-viscosity coefficient field.
pub fn viscosity_field(
    space: &FESpace,
    wall: &WallDistanceField,
    params: &ModelParams,
    k: &KState,
) -> Result<CoefficientField, ModelError> {
    DampingField::new(space, wall, params).viscosity(params, Some(k))
}

/// Spec-named wrapper: the k-equation right-side factor.
pub fn dissipation_coefficient(
    space: &FESpace,
    wall: &WallDistanceField,
    params: &ModelParams,
    v: &[f64],
) -> f64 {
    DampingField::new(space, wall, params).dissipation_coefficient(space, v, params)
}

/// Backward-Euler update of the k-equation with the right side lagged:
/// (k_{n+1} - k_n)/dt + (sqrt(2)/2) k_{n+1}/tau = eps k_n.
pub fn k_update_be(k_n: f64, dt: f64, tau: f64, eps: f64) -> Result<f64, ModelError> {
    if !(dt > 0.0) {
        return Err(ModelError::NonPositiveDt(dt));
    }
    if k_n < 0.0 {
        return Err(ModelError::NegativeK(k_n));
    }
    Ok(k_n * (1.0 + dt * eps) / (1.0 + 0.5 * std::f64::consts::SQRT_2 * dt / tau))
}

/// Exact solution of the frozen-coefficient k-equation over one step:
/// k_{n+1} = k_n exp((eps - sqrt(2)/(2 tau)) dt).
pub fn k_update_exact(k_n: f64, dt: f64, tau: f64, eps: f64) -> Result<f64, ModelError> {
    if !(dt > 0.0) {
        return Err(ModelError::NonPositiveDt(dt));
    }
    if k_n < 0.0 {
        return Err(ModelError::NegativeK(k_n));
    }
    Ok(k_n * ((eps - 0.5 * std::f64::consts::SQRT_2 / tau) * dt).exp())
}

/// Mixing-length cap factor of the initialization formula
/// l(x) = min(kappa y, 0.082 Re^{-1/2}).
pub const INIT_CAP_FACTOR: f64 = 0.082;

/// Initialization of k at the model activation time:
/// k = (1/|Omega|) (1/(2 tau^2)) * integral of l(x)^2.
pub fn k_initialize(space: &FESpace, wall: &WallDistanceField, params: &ModelParams) -> KState {
    let rule = assembly_rule();
    let re = params.reynolds();
    let cap = INIT_CAP_FACTOR / re.sqrt();
    let kappa = params.kappa;
    let l_sq = CoefficientField::from_wall_fn(space, &rule, wall, move |y| {
        let l = (kappa * y).min(cap);
        l * l
    });
    // integrate l(x)^2 with the assembly quadrature
    let mesh = space.mesh();
    let n_q = rule.len();
    let mut integral = 0.0;
    for e in 0..mesh.triangles().len() {
        let area2 = 2.0 * mesh.triangle_area(e);
        for (q, w) in rule.weights.iter().enumerate() {
            integral += w * area2 * l_sq.eval(e, n_q, q);
        }
    }
    let value = integral / (2.0 * params.tau * params.tau * mesh.area());
    KState { value, time: params.t_star }
}
