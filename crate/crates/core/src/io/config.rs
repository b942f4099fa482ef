//! Run configuration: a flat, human-writable TOML file of typed fields.

use crate::fem::ViscousForm;
use crate::model::{Damping, ModelParams};
use crate::solver::KUpdateMode;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    /// GMSH ASCII v2.2 file at `mesh_path`.
    File,
    /// Structured unit square with `mesh_n` subdivisions.
    Square,
    /// Built-in offset-circles domain at target size `mesh_lc`.
    Circles,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceKind {
    None,
    /// Ramped counterclockwise forcing of the offset-circles benchmark.
    Benchmark,
}

/// Everything needed to reproduce a run. Lengths are nondimensional; times
/// share the unit of tau.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh_kind: MeshKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_lc: Option<f64>,

    pub dt: f64,
    pub t_end: f64,

    pub nu: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_one")]
    pub length_scale: f64,
    #[serde(default = "default_one")]
    pub velocity_scale: f64,
    #[serde(default = "default_t_star")]
    pub t_star: f64,
    #[serde(default = "default_damping")]
    pub damping: Damping,

    #[serde(default = "default_k_update")]
    pub k_update: KUpdateMode,
    #[serde(default = "default_viscous_form")]
    pub viscous_form: ViscousForm,
    #[serde(default = "default_force")]
    pub force: ForceKind,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Field snapshot cadence in steps; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Diagnostics sampling stride in steps (1 = every step).
    #[serde(default = "default_stride")]
    pub diagnostics_stride: usize,
    /// Reserved; the solver is deterministic and does not consume it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_from: Option<PathBuf>,
}

fn default_tau() -> f64 {
    0.1
}
fn default_mu() -> f64 {
    0.55
}
fn default_kappa() -> f64 {
    0.41
}
fn default_one() -> f64 {
    1.0
}
fn default_t_star() -> f64 {
    1.0
}
fn default_damping() -> Damping {
    Damping::TestVariant
}
fn default_k_update() -> KUpdateMode {
    KUpdateMode::Be
}
fn default_viscous_form() -> ViscousForm {
    ViscousForm::FullGradient
}
fn default_force() -> ForceKind {
    ForceKind::Benchmark
}
fn default_stride() -> usize {
    1
}

impl RunConfig {
    /// The scaled-down benchmark configuration used by the verification runs.
    pub fn benchmark_scaled() -> Self {
        RunConfig {
            mesh_kind: MeshKind::Circles,
            mesh_path: None,
            mesh_n: None,
            mesh_lc: Some(1.0 / 16.0),
            dt: 5e-3,
            t_end: 1.2,
            nu: 1e-4,
            tau: 0.1,
            mu: 0.55,
            kappa: 0.41,
            length_scale: 1.0,
            velocity_scale: 1.0,
            t_star: 1.0,
            damping: Damping::TestVariant,
            k_update: KUpdateMode::Be,
            viscous_form: ViscousForm::FullGradient,
            force: ForceKind::Benchmark,
            output_dir: None,
            snapshot_every: 0,
            diagnostics_stride: 1,
            seed: 0,
            restart_from: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) {
            return Err(invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if !(self.nu > 0.0) {
            return Err(invalid("nu", format!("must be positive, got {}", self.nu)));
        }
        for (field, v) in [
            ("tau", self.tau),
            ("mu", self.mu),
            ("kappa", self.kappa),
            ("length_scale", self.length_scale),
            ("velocity_scale", self.velocity_scale),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::Invalid {
                    field: match field {
                        "tau" => "tau",
                        "mu" => "mu",
                        "kappa" => "kappa",
                        "length_scale" => "length_scale",
                        _ => "velocity_scale",
                    },
                    message: format!("must be positive, got {v}"),
                });
            }
        }
        if self.t_star < 0.0 {
            return Err(invalid("t_star", "must be nonnegative"));
        }
        if self.diagnostics_stride == 0 {
            return Err(invalid("diagnostics_stride", "must be at least 1"));
        }
        match self.mesh_kind {
            MeshKind::File => {
                let path = self
                    .mesh_path
                    .as_ref()
                    .ok_or_else(|| invalid("mesh_path", "required when mesh_kind = \"file\""))?;
                if !path.exists() {
                    return Err(invalid("mesh_path", format!("{} does not exist", path.display())));
                }
            }
            MeshKind::Square => {
                let n = self
                    .mesh_n
                    .ok_or_else(|| invalid("mesh_n", "required when mesh_kind = \"square\""))?;
                if n == 0 {
                    return Err(invalid("mesh_n", "must be at least 1"));
                }
            }
            MeshKind::Circles => {
                let lc = self
                    .mesh_lc
                    .ok_or_else(|| invalid("mesh_lc", "required when mesh_kind = \"circles\""))?;
                if !(lc > 0.0 && lc <= 0.5) {
                    return Err(invalid("mesh_lc", format!("must be in (0, 0.5], got {lc}")));
                }
            }
        }
        if let Some(r) = &self.restart_from {
            if !r.exists() {
                return Err(invalid("restart_from", format!("{} does not exist", r.display())));
            }
        }
        Ok(())
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            nu: self.nu,
            tau: self.tau,
            mu: self.mu,
            kappa: self.kappa,
            length_scale: self.length_scale,
            velocity_scale: self.velocity_scale,
            t_star: self.t_star,
            damping: self.damping,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_identity() {
        let cfg = RunConfig::benchmark_scaled();
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        // twice, in case serialization normalizes anything
        assert_eq!(back, RunConfig::from_toml(&back.to_toml()).unwrap());
    }

    #[test]
    fn nonpositive_dt_names_the_field() {
        let mut cfg = RunConfig::benchmark_scaled();
        cfg.dt = 0.0;
        let text = cfg.to_toml();
        match RunConfig::from_toml(&text) {
            Err(ConfigError::Invalid { field: "dt", .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_mesh_parameter_is_reported() {
        let mut cfg = RunConfig::benchmark_scaled();
        cfg.mesh_lc = None;
        match cfg.validate() {
            Err(ConfigError::Invalid { field: "mesh_lc", .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = "mesh_kind = \"square\"\nmesh_n = 4\ndt = 0.1\nt_end = 1.0\nnu = 1.0\nbogus = 3\n";
        assert!(matches!(RunConfig::from_toml(text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn defaults_fill_benchmark_parameters() {
        let text = "mesh_kind = \"square\"\nmesh_n = 4\ndt = 0.1\nt_end = 1.0\nnu = 1e-4\n";
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.tau, 0.1);
        assert_eq!(cfg.mu, 0.55);
        assert_eq!(cfg.kappa, 0.41);
        assert_eq!(cfg.t_star, 1.0);
        assert_eq!(cfg.k_update, KUpdateMode::Be);
    }
}
