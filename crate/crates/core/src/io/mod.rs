//! File formats owned by the front end: run configuration, the statistics
//! CSV, legacy-VTK field snapshots, and the restart state dump.

pub mod config;
pub mod state;
pub mod stats;
pub mod vtk;

pub use config::{ConfigError, ForceKind, MeshKind, RunConfig};
pub use state::{read_state, write_state};
pub use stats::{RunMeta, StatsReader, StatsWriter, STATS_VERSION};
pub use vtk::write_snapshot;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {detail}")]
    Format { path: std::path::PathBuf, line: usize, detail: String },
    #[error("unsupported statistics schema version {found} (this reader supports v{supported})")]
    UnsupportedVersion { found: String, supported: u32 },
}

pub(crate) fn io_err(path: &std::path::Path, source: std::io::Error) -> IoError {
    IoError::Io { path: path.to_path_buf(), source }
}
