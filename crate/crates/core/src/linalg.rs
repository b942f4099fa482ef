//! Sparse matrix support for assembly and direct solves: a COO accumulator,
//! CSR storage with the products needed by the diagnostics, and a thin
//! wrapper over a sparse LU factorization.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("operand length {got} incompatible with {rows}x{cols} matrix")]
    DimensionMismatch { rows: usize, cols: usize, got: usize },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("inverse iteration did not converge within {0} iterations")]
    EigenNoConvergence(usize),
}

/// Triplet accumulator; duplicate entries sum on conversion to CSR.
#[derive(Clone, Debug)]
pub struct CooMat {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooMat {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        CooMat { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        CooMat { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    pub fn to_csr(&self) -> CsrMat {
        let mut counts = vec![0usize; self.nrows + 1];
        for &(r, _, _) in &self.entries {
            counts[r + 1] += 1;
        }
        for i in 0..self.nrows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; self.entries.len()];
        let mut vals = vec![0f64; self.entries.len()];
        let mut next = counts.clone();
        for &(r, c, v) in &self.entries {
            let slot = next[r];
            cols[slot] = c;
            vals[slot] = v;
            next[r] += 1;
        }
        // sort within each row and merge duplicates
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut out_cols = Vec::with_capacity(cols.len());
        let mut out_vals = Vec::with_capacity(vals.len());
        let mut idx: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            let (lo, hi) = (counts[r], counts[r + 1]);
            idx.clear();
            idx.extend(lo..hi);
            idx.sort_unstable_by_key(|&i| cols[i]);
            let mut i = 0;
            while i < idx.len() {
                let c = cols[idx[i]];
                let mut v = vals[idx[i]];
                i += 1;
                while i < idx.len() && cols[idx[i]] == c {
                    v += vals[idx[i]];
                    i += 1;
                }
                out_cols.push(c);
                out_vals.push(v);
            }
            row_ptr[r + 1] = out_cols.len();
        }
        CsrMat { nrows: self.nrows, ncols: self.ncols, row_ptr, cols: out_cols, vals: out_vals }
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct CsrMat {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMat { nrows, ncols, row_ptr: vec![0; nrows + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[lo..hi].iter().copied().zip(self.vals[lo..hi].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
        y
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                y[c] += v * x[r];
            }
        }
        y
    }

    /// x^T A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        let mut acc = 0.0;
        for r in 0..self.nrows {
            let mut row_acc = 0.0;
            for (c, v) in self.row(r) {
                row_acc += v * y[c];
            }
            acc += x[r] * row_acc;
        }
        acc
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |A - A^T| entrywise; 0 for an exactly symmetric matrix.
    pub fn symmetry_violation(&self) -> f64 {
        let mut t = std::collections::HashMap::new();
        for (r, c, v) in self.iter() {
            t.insert((r, c), v);
        }
        let mut worst = 0.0f64;
        for (&(r, c), &v) in &t {
            let vt = t.get(&(c, r)).copied().unwrap_or(0.0);
            worst = worst.max((v - vt).abs());
        }
        worst
    }

    /// alpha * self + beta * other, patterns merged.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMat, beta: f64) -> CsrMat {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut cols = Vec::with_capacity(self.nnz() + other.nnz());
        let mut vals = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.nrows {
            let mut a = self.row_ptr[r];
            let a_hi = self.row_ptr[r + 1];
            let mut b = other.row_ptr[r];
            let b_hi = other.row_ptr[r + 1];
            while a < a_hi || b < b_hi {
                let ca = if a < a_hi { self.cols[a] } else { usize::MAX };
                let cb = if b < b_hi { other.cols[b] } else { usize::MAX };
                if ca < cb {
                    cols.push(ca);
                    vals.push(alpha * self.vals[a]);
                    a += 1;
                } else if cb < ca {
                    cols.push(cb);
                    vals.push(beta * other.vals[b]);
                    b += 1;
                } else {
                    cols.push(ca);
                    vals.push(alpha * self.vals[a] + beta * other.vals[b]);
                    a += 1;
                    b += 1;
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        CsrMat { nrows: self.nrows, ncols: self.ncols, row_ptr, cols, vals }
    }

    pub fn scale(&self, alpha: f64) -> CsrMat {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= alpha;
        }
        out
    }

    /// Extract the submatrix with the given (sorted) row and column index sets.
    pub fn submatrix(&self, rows: &[usize], col_map: &[Option<usize>], ncols_out: usize) -> CsrMat {
        let mut coo = CooMat::with_capacity(rows.len(), ncols_out, self.nnz());
        for (ri, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if let Some(ci) = col_map[c] {
                    coo.push(ri, ci, v);
                }
            }
        }
        coo.to_csr()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }
}

/// Direct sparse LU factorization of a square matrix.
pub struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    pub fn factor(a: &CsrMat) -> Result<Self, LinalgError> {
        // sequential kernels: deterministic results, and the threading
        // overhead loses at these problem sizes
        static PAR: std::sync::Once = std::sync::Once::new();
        PAR.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
        assert_eq!(a.nrows(), a.ncols());
        let triplets: Vec<faer::sparse::Triplet<usize, usize, f64>> =
            a.iter().map(|(r, c, v)| faer::sparse::Triplet::new(r, c, v)).collect();
        let mat = faer::sparse::SparseColMat::try_new_from_triplets(a.nrows(), a.ncols(), &triplets)
            .map_err(|e| LinalgError::Factorization(format!("{e:?}")))?;

        let lu = mat.sp_lu().map_err(|e| LinalgError::Factorization(format!("{e:?}")))?;
        Ok(SparseLu { lu, n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        use faer::prelude::*;
        let rhs = faer::Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// Smallest eigenvalue of the generalized problem A x = lambda M x with A, M
/// symmetric positive definite, by inverse iteration on A.
pub fn smallest_generalized_eigenvalue(
    a: &CsrMat,
    m: &CsrMat,
    max_iters: usize,
    rel_tol: f64,
) -> Result<f64, LinalgError> {
    assert_eq!(a.nrows(), a.ncols());
    assert_eq!(m.nrows(), m.ncols());
    assert_eq!(a.nrows(), m.nrows());
    let n = a.nrows();
    if n == 0 {
        return Err(LinalgError::DimensionMismatch { rows: 0, cols: 0, got: 0 });
    }
    let lu = SparseLu::factor(a)?;
    let mut x = vec![1.0; n];
    let mut lambda_prev = f64::INFINITY;
    for _ in 0..max_iters {
        let mx = m.matvec(&x);
        let y = lu.solve(&mx);
        let norm = (m.quadratic(&y)).sqrt();
        for v in &mut x {
            *v = 0.0;
        }
        for (xi, yi) in x.iter_mut().zip(y.iter()) {
            *xi = yi / norm;
        }
        let lambda = a.quadratic(&x) / m.quadratic(&x);
        if (lambda - lambda_prev).abs() <= rel_tol * lambda.abs() {
            return Ok(lambda);
        }
        lambda_prev = lambda;
    }
    Err(LinalgError::EigenNoConvergence(max_iters))
}
