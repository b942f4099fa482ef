//! Restart state dump: a versioned textual coefficient file. Values carry 17
//! significant digits, which round-trips every f64 exactly, so a restarted
//! run reproduces the continuation bit for bit.

use super::{io_err, IoError};
use crate::model::KState;
use crate::solver::State;
use std::io::{BufRead, Write};
use std::path::Path;

const MAGIC: &str = "halfeq-state v1";

pub fn write_state(state: &State, path: &Path) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut w = || -> std::io::Result<()> {
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "n {}", state.n)?;
        writeln!(out, "t {:.16e}", state.t)?;
        match &state.k {
            Some(k) => writeln!(out, "k {:.16e} {:.16e}", k.value, k.time)?,
            None => writeln!(out, "k none")?,
        }
        writeln!(out, "v {}", state.v.len())?;
        for x in &state.v {
            writeln!(out, "{x:.16e}")?;
        }
        writeln!(out, "p {}", state.p.len())?;
        for x in &state.p {
            writeln!(out, "{x:.16e}")?;
        }
        Ok(())
    };
    w().map_err(|e| io_err(path, e))
}

pub fn read_state(path: &Path) -> Result<State, IoError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut lines = reader.lines().enumerate();
    let fmt = |line: usize, detail: String| IoError::Format {
        path: path.to_path_buf(),
        line: line + 1,
        detail,
    };
    let mut next = |what: &str| -> Result<(usize, String), IoError> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i, l)),
            Some((i, Err(e))) => Err(fmt(i, e.to_string())),
            None => Err(fmt(usize::MAX, format!("unexpected end of file, wanted {what}"))),
        }
    };

    let (i, magic) = next("magic")?;
    if magic != MAGIC {
        return Err(fmt(i, format!("bad magic {magic:?}, expected {MAGIC:?}")));
    }
    let (i, n_line) = next("step index")?;
    let n: usize = n_line
        .strip_prefix("n ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| fmt(i, "bad step index".into()))?;
    let (i, t_line) = next("time")?;
    let t: f64 = t_line
        .strip_prefix("t ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| fmt(i, "bad time".into()))?;
    let (i, k_line) = next("k")?;
    let k = if k_line == "k none" {
        None
    } else {
        let rest = k_line.strip_prefix("k ").ok_or_else(|| fmt(i, "bad k line".into()))?;
        let mut it = rest.split_whitespace();
        let value: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fmt(i, "bad k value".into()))?;
        let time: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fmt(i, "bad k time".into()))?;
        Some(KState { value, time })
    };

    let mut read_vec = |name: &str| -> Result<Vec<f64>, IoError> {
        let (i, head) = next(name)?;
        let count: usize = head
            .strip_prefix(&format!("{name} "))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fmt(i, format!("bad {name} header")))?;
        let mut v = Vec::with_capacity(count);
        for _ in 0..count {
            let (i, line) = next(name)?;
            v.push(line.parse().map_err(|e| fmt(i, format!("bad value: {e}")))?);
        }
        Ok(v)
    };
    let v = read_vec("v")?;
    let p = read_vec("p")?;
    Ok(State { v, p, k, t, n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_roundtrips_bit_for_bit() {
        let state = State {
            v: vec![1.0 / 3.0, -2.7e-19, f64::MIN_POSITIVE, 0.1 + 0.2],
            p: vec![std::f64::consts::PI, -0.0],
            k: Some(KState { value: 3.362e-5, time: 1.0 }),
            t: 1.005,
            n: 201,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.txt");
        write_state(&state, &path).unwrap();
        let back = read_state(&path).unwrap();
        assert_eq!(back.n, state.n);
        assert_eq!(back.t.to_bits(), state.t.to_bits());
        assert_eq!(back.k.unwrap().value.to_bits(), state.k.unwrap().value.to_bits());
        for (a, b) in state.v.iter().zip(&back.v) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in state.p.iter().zip(&back.p) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn missing_k_reads_as_none() {
        let state = State { v: vec![1.0], p: vec![2.0], k: None, t: 0.5, n: 10 };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.txt");
        write_state(&state, &path).unwrap();
        assert!(read_state(&path).unwrap().k.is_none());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.txt");
        std::fs::write(&path, "nonsense\n").unwrap();
        assert!(matches!(read_state(&path), Err(IoError::Format { line: 1, .. })));
    }
}
