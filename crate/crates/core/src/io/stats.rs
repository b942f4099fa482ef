//! Versioned statistics CSV. Values carry 17 significant digits so the
//! offline checks can re-verify the discrete identities losslessly.

use super::{io_err, IoError};
use crate::diagnostics::BudgetRecord;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const STATS_VERSION: u32 = 1;

const COLUMNS: &str = "n,t,kinetic_energy,nu_dissipation,nut_dissipation,k,forcing_power,energy_residual,k_residual,increment_sq,force_l2_sq,eps";

/// Run metadata embedded in the CSV header so a statistics file is
/// self-contained for offline verification.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunMeta {
    pub nu: f64,
    pub tau: f64,
    pub mu: f64,
    pub kappa: f64,
    pub dt: f64,
    pub t_star: f64,
    /// Domain area |Omega|.
    pub omega: f64,
    /// Discrete Poincare constant of the mesh.
    pub lambda: f64,
    pub damping: crate::model::Damping,
    pub k_update: crate::solver::KUpdateMode,
    pub viscous_form: crate::fem::ViscousForm,
}

pub struct StatsWriter {
    out: BufWriter<std::fs::File>,
    path: PathBuf,
}

impl StatsWriter {
    pub fn create(path: &Path, meta: &RunMeta) -> Result<Self, IoError> {
        let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        let mut out = BufWriter::new(file);
        let meta_json = serde_json::to_string(meta).expect("meta serializes");
        write!(out, "# halfeq-stats v{STATS_VERSION}\n# meta {meta_json}\n{COLUMNS}\n")
            .map_err(|e| io_err(path, e))?;
        Ok(StatsWriter { out, path: path.to_path_buf() })
    }

    pub fn write_row(&mut self, r: &BudgetRecord) -> Result<(), IoError> {
        writeln!(
            self.out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.n,
            r.t,
            r.kinetic_energy,
            r.nu_dissipation,
            r.nut_dissipation,
            r.k,
            r.forcing_power,
            r.energy_residual,
            r.k_residual,
            r.increment_sq,
            r.force_l2_sq,
            r.eps,
        )
        .map_err(|e| io_err(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<(), IoError> {
        self.out.flush().map_err(|e| io_err(&self.path, e))
    }
}

#[derive(Debug)]
pub struct StatsReader {
    pub meta: RunMeta,
    pub records: Vec<BudgetRecord>,
}

impl StatsReader {
    pub fn read(path: &Path) -> Result<Self, IoError> {
        let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        let mut lines = std::io::BufReader::new(file).lines();
        let fmt = |line: usize, detail: String| IoError::Format {
            path: path.to_path_buf(),
            line,
            detail,
        };

        let version_line = lines
            .next()
            .transpose()
            .map_err(|e| io_err(path, e))?
            .ok_or_else(|| fmt(1, "empty statistics file".into()))?;
        let found = version_line.trim_start_matches("# halfeq-stats v").to_string();
        if !version_line.starts_with("# halfeq-stats v") || found != STATS_VERSION.to_string() {
            return Err(IoError::UnsupportedVersion { found: version_line, supported: STATS_VERSION });
        }

        let meta_line = lines
            .next()
            .transpose()
            .map_err(|e| io_err(path, e))?
            .ok_or_else(|| fmt(2, "missing meta line".into()))?;
        let meta_json = meta_line
            .strip_prefix("# meta ")
            .ok_or_else(|| fmt(2, "missing `# meta` line".into()))?;
        let meta: RunMeta =
            serde_json::from_str(meta_json).map_err(|e| fmt(2, format!("bad meta: {e}")))?;

        let header = lines
            .next()
            .transpose()
            .map_err(|e| io_err(path, e))?
            .ok_or_else(|| fmt(3, "missing column header".into()))?;
        if header != COLUMNS {
            return Err(fmt(3, format!("unexpected columns {header:?}")));
        }

        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| io_err(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = i + 4;
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 12 {
                return Err(fmt(lineno, format!("expected 12 columns, found {}", parts.len())));
            }
            let f = |j: usize| -> Result<f64, IoError> {
                parts[j]
                    .parse()
                    .map_err(|e| fmt(lineno, format!("column {}: {e}", j + 1)))
            };
            records.push(BudgetRecord {
                n: parts[0]
                    .parse()
                    .map_err(|e| fmt(lineno, format!("column 1: {e}")))?,
                t: f(1)?,
                kinetic_energy: f(2)?,
                nu_dissipation: f(3)?,
                nut_dissipation: f(4)?,
                k: f(5)?,
                forcing_power: f(6)?,
                energy_residual: f(7)?,
                k_residual: f(8)?,
                increment_sq: f(9)?,
                force_l2_sq: f(10)?,
                eps: f(11)?,
            });
        }
        Ok(StatsReader { meta, records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::ViscousForm;
    use crate::model::Damping;
    use crate::solver::KUpdateMode;

    fn meta() -> RunMeta {
        RunMeta {
            nu: 1e-4,
            tau: 0.1,
            mu: 0.55,
            kappa: 0.41,
            dt: 5e-3,
            t_star: 1.0,
            omega: 3.11,
            lambda: 5.8,
            damping: Damping::TestVariant,
            k_update: KUpdateMode::Be,
            viscous_form: ViscousForm::FullGradient,
        }
    }

    #[test]
    fn roundtrip_preserves_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.csv");
        let rows = vec![
            BudgetRecord { n: 0, ..Default::default() },
            BudgetRecord {
                n: 1,
                t: 5e-3,
                kinetic_energy: 1.0 / 3.0,
                nu_dissipation: 2.7e-9,
                nut_dissipation: f64::MIN_POSITIVE,
                k: 3.361999999e-5,
                forcing_power: -1.0 / 7.0,
                energy_residual: -3.3e-12,
                k_residual: 9.9e-16,
                increment_sq: 0.1234567890123456789,
                force_l2_sq: 4.19,
                eps: 0.5 * std::f64::consts::SQRT_2,
            },
        ];
        {
            let mut w = StatsWriter::create(&path, &meta()).unwrap();
            for r in &rows {
                w.write_row(r).unwrap();
            }
            w.flush().unwrap();
        }
        let back = StatsReader::read(&path).unwrap();
        assert_eq!(back.meta, meta());
        assert_eq!(back.records.len(), 2);
        for (a, b) in rows.iter().zip(&back.records) {
            assert_eq!(a, b, "records must round-trip bit for bit");
        }
    }

    #[test]
    fn unknown_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.csv");
        std::fs::write(&path, "# halfeq-stats v999\n# meta {}\nn\n").unwrap();
        assert!(matches!(
            StatsReader::read(&path),
            Err(IoError::UnsupportedVersion { .. })
        ));
    }

    #[test]
    fn truncated_row_is_reported_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.csv");
        {
            let mut w = StatsWriter::create(&path, &meta()).unwrap();
            w.write_row(&BudgetRecord::default()).unwrap();
            w.flush().unwrap();
        }
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("1,2,3\n");
        std::fs::write(&path, text).unwrap();
        match StatsReader::read(&path) {
            Err(IoError::Format { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }
}
