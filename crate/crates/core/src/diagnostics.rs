//! Runtime verification of the scheme's identities and inequalities: per-step
//! energy and k budgets, positivity, the cumulative stability bound, and a
//! dense small-mesh inf-sup estimator.

use crate::fem::{
    assemble_diffusion, assemble_divergence, assemble_divergence_p1, assemble_mass,
    assemble_mass_p1, pressure_mass, scalar_mass_p1, vector_stiffness_p1, CoefficientField,
    DirichletReducer, FESpace, ViscousForm,
};
use crate::linalg::CsrMat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("problem size {0} exceeds the dense-oracle cap {1}")]
    TooLargeForDenseOracle(usize, usize),
    #[error("space has too few free dofs for an inf-sup estimate ({velocity} velocity, {pressure} pressure)")]
    DofDeficient { velocity: usize, pressure: usize },
    #[error("factorization of the velocity Gram matrix failed")]
    GramFactorization,
    #[error(transparent)]
    Fem(#[from] crate::fem::FemError),
}

/// One row of the per-step budget written to the statistics stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetRecord {
    pub n: usize,
    pub t: f64,
    /// 0.5 ||v^n||^2
    pub kinetic_energy: f64,
    /// integral of nu |grad v^n|^2
    pub nu_dissipation: f64,
    /// integral of nu_T^{n-1} |grad v^n|^2
    pub nut_dissipation: f64,
    /// scalar k^n (0 before the model activates)
    pub k: f64,
    /// (f^n, v^n)
    pub forcing_power: f64,
    pub energy_residual: f64,
    pub k_residual: f64,
    /// ||v^n - v^{n-1}||^2
    pub increment_sq: f64,
    /// ||f^n||^2
    pub force_l2_sq: f64,
    /// k-equation coefficient eps(v^n) used for the update into this row
    pub eps: f64,
}

/// Relative defect of the per-step energy identity obtained by testing the
/// momentum equation with 2 dt v^{n+1}:
///   ||v1||^2 - ||v0||^2 + ||v1 - v0||^2
///     + 2 dt integral (nu + nu_T^n)|grad v1|^2 - 2 dt (f, v1) = 0.
/// Computed from the same assembled operators the solver used, so it tests
/// the solve rather than re-deriving it.
pub fn energy_residual(
    mass: &CsrMat,
    a_visc: &CsrMat,
    load: &[f64],
    v0: &[f64],
    v1: &[f64],
    dt: f64,
) -> f64 {
    let m1 = mass.quadratic(v1);
    let m0 = mass.quadratic(v0);
    let inc: Vec<f64> = v1.iter().zip(v0).map(|(a, b)| a - b).collect();
    let minc = mass.quadratic(&inc);
    let diss = 2.0 * dt * a_visc.quadratic(v1);
    let power: f64 = 2.0 * dt * load.iter().zip(v1).map(|(f, v)| f * v).sum::<f64>();
    let r = m1 - m0 + minc + diss - power;
    let scale = m1.abs().max(m0.abs()).max(minc).max(diss.abs()).max(power.abs());
    if scale == 0.0 {
        0.0
    } else {
        r / scale
    }
}

/// Relative defect of the k-update equation in its dt-scaled form
/// (the third equation of the scheme multiplied by dt):
///   (k1 - k0) + dt (sqrt(2)/2) k1 / tau - dt eps k0 = 0.
/// Dividing the unscaled residual by 1/dt would amplify roundoff past the
/// 1e-14 gate; the scaled form is the one the stability proof sums.
pub fn k_residual(k0: f64, k1: f64, dt: f64, tau: f64, eps: f64) -> f64 {
    let decay = dt * 0.5 * std::f64::consts::SQRT_2 / tau * k1;
    let source = dt * eps * k0;
    let r = (k1 - k0) + decay - source;
    let scale = k0.abs().max(k1.abs()).max(decay.abs()).max(source.abs());
    if scale == 0.0 {
        0.0
    } else {
        r.abs() / scale
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LedgerParams {
    pub nu: f64,
    pub tau: f64,
    pub dt: f64,
    /// Domain area |Omega|.
    pub omega: f64,
    /// Discrete Poincare constant; the bound's constant is C = 1/(nu lambda).
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct LedgerRow {
    pub n: usize,
    pub t: f64,
    /// Left side minus right side of the cumulative stability bound.
    pub margin: f64,
    /// Margin normalized by the right side.
    pub relative_margin: f64,
    /// Positive excursion beyond 5% of the right side.
    pub flagged: bool,
}

/// Cumulative stability inequality, evaluated at every step from the budget
/// stream:
///   ||v^N||^2 + 2|O| k^N
///     + sum dt (nu ||grad v||^2 + sqrt(2)/tau |O| k) + sum ||dv||^2
///   <= C dt sum ||f||^2 + ||v^0||^2 + 2|O| k(init),
/// with C = 1/(nu lambda). The row where k first becomes positive is the
/// initialization row: its k joins the right side as initial data and is
/// excluded from the dissipation sum.
pub fn stability_ledger(records: &[BudgetRecord], params: &LedgerParams) -> Vec<LedgerRow> {
    let mut out = Vec::with_capacity(records.len().saturating_sub(1));
    if records.is_empty() {
        return out;
    }
    let c = 1.0 / (params.nu * params.lambda);
    let sqrt2_over_tau = std::f64::consts::SQRT_2 / params.tau;
    let first = &records[0];
    let mut rhs = 2.0 * first.kinetic_energy + 2.0 * params.omega * first.k;
    let mut lhs_sum = 0.0;
    let mut k_prev = first.k;
    for rec in &records[1..] {
        let k_initialized = k_prev == 0.0 && rec.k > 0.0;
        rhs += c * params.dt * rec.force_l2_sq;
        if k_initialized {
            rhs += 2.0 * params.omega * rec.k;
        } else {
            lhs_sum += params.dt * sqrt2_over_tau * params.omega * rec.k;
        }
        lhs_sum += params.dt * rec.nu_dissipation + rec.increment_sq;
        let lhs = 2.0 * rec.kinetic_energy + 2.0 * params.omega * rec.k + lhs_sum;
        let margin = lhs - rhs;
        let relative_margin = if rhs != 0.0 { margin / rhs } else { margin };
        out.push(LedgerRow {
            n: rec.n,
            t: rec.t,
            margin,
            relative_margin,
            flagged: relative_margin > 0.05,
        });
        k_prev = rec.k;
    }
    out
}

/// Default dense-oracle size cap for the inf-sup estimator.
pub const INFSUP_DENSE_CAP: usize = 1500;

/// Discrete inf-sup constant of the Taylor-Hood pair by a dense generalized
/// singular-value oracle: beta^2 is the smallest nonzero eigenvalue of
/// B X^{-1} B^T q = lambda M_p q, with X the velocity H1 Gram matrix on the
/// homogeneous Dirichlet subspace and M_p the pressure mass matrix. The
/// constant-pressure null mode is discarded.
pub fn infsup_estimate(space: &FESpace, cap: usize) -> Result<f64, DiagnosticsError> {
    let one = CoefficientField::constant(1.0);
    let a1 = assemble_diffusion(space, &one, ViscousForm::FullGradient)?;
    let m = assemble_mass(space);
    let x = a1.add_scaled(1.0, &m, 1.0);
    let red = DirichletReducer::homogeneous(space);
    let b = red.reduce_columns(&assemble_divergence(space));
    let x_red = red.reduce_square(&x);
    let mp = pressure_mass(space);
    infsup_dense(&x_red, &b, &mp, cap)
}

/// The same estimator on the equal-order P1-P1 pair (a known unstable pair,
/// kept as a negative control).
pub fn infsup_estimate_p1p1(space: &FESpace, cap: usize) -> Result<f64, DiagnosticsError> {
    let x = vector_stiffness_p1(space).add_scaled(1.0, &assemble_mass_p1(space), 1.0);
    let b_full = assemble_divergence_p1(space);
    // interior P1 dofs: both components of every non-Dirichlet vertex
    let nv = space.n_pressure_dofs();
    let mut interior = Vec::new();
    let mut col_map = vec![None; 2 * nv];
    for v in 0..nv {
        if !space.is_dirichlet_vertex(v) {
            for c in 0..2 {
                col_map[2 * v + c] = Some(interior.len());
                interior.push(2 * v + c);
            }
        }
    }
    let x_red = x.submatrix(&interior, &col_map, interior.len());
    let all_rows: Vec<usize> = (0..nv).collect();
    let b_red = b_full.submatrix(&all_rows, &col_map, interior.len());
    let mp = scalar_mass_p1(space);
    infsup_dense(&x_red, &b_red, &mp, cap)
}

fn infsup_dense(
    x_red: &CsrMat,
    b_red: &CsrMat,
    mp: &CsrMat,
    cap: usize,
) -> Result<f64, DiagnosticsError> {
    let ni = x_red.nrows();
    let np = mp.nrows();
    let total = ni + np;
    if total > cap {
        return Err(DiagnosticsError::TooLargeForDenseOracle(total, cap));
    }
    if ni == 0 || np < 2 {
        return Err(DiagnosticsError::DofDeficient { velocity: ni, pressure: np });
    }
    let x_dense = x_red.to_dense();
    let b_dense = b_red.to_dense();
    let chol_x =
        nalgebra::Cholesky::new(x_dense).ok_or(DiagnosticsError::GramFactorization)?;
    let xinv_bt = chol_x.solve(&b_dense.transpose());
    let s = &b_dense * xinv_bt;

    let chol_p =
        nalgebra::Cholesky::new(mp.to_dense()).ok_or(DiagnosticsError::GramFactorization)?;
    let l = chol_p.l();
    // T = L^{-1} S L^{-T}, then a symmetric eigensolve
    let y = l.solve_lower_triangular(&s).ok_or(DiagnosticsError::GramFactorization)?;
    let t = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(DiagnosticsError::GramFactorization)?
        .transpose();
    let t_sym = 0.5 * (&t + t.transpose());
    let eig = nalgebra::SymmetricEigen::new(t_sym);
    let mut lams: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    lams.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // drop the constant-pressure zero mode, keep the next eigenvalue
    let beta_sq = lams[1].max(0.0);
    Ok(beta_sq.sqrt())
}
