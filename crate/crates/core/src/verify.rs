//! Convergence-rate machinery: manufactured-solution tests for the
//! Navier-Stokes core, scalar-ODE oracles, and the two self-convergence
//! studies (rate in time against a fine-step reference, rate in space from
//! ratios of differences between resolutions).

use crate::driver::{run_transient_observed, DriverError};
use crate::fem::{
    self, eval_velocity_at, interpolate_velocity, norms, FESpace,
    ViscousForm,
};
use crate::io::{config::MeshKind, RunConfig};
use crate::model::{k_update_be, k_update_exact, ModelParams};
use crate::solver::{SolverError, State, Stepper, StepperOptions};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("streams share no coincident time points in the window")]
    NoCoincidentTimes,
    #[error("reference step {dt_ref} does not divide dt {dt}")]
    NonNestedSteps { dt: f64, dt_ref: f64 },
    #[error("study needs at least {need} levels, got {got}")]
    TooFewLevels { need: usize, got: usize },
    #[error("study field {field}: {message}")]
    BadStudyConfig { field: &'static str, message: String },
    #[error("manufactured velocity is not divergence-free: |div u| = {0:.3e} at {1:?}")]
    NotDivergenceFree(f64, [f64; 2]),
    #[error("steady iteration did not converge within {0} iterations")]
    SteadyNoConvergence(usize),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

// ---------------------------------------------------------------------------
// rate tables

/// One row of a convergence table: a resolution parameter, the two error
/// columns of the benchmark tables (max-in-time L2 norm, time-integrated
/// squared H1-seminorm), and the estimated orders.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RateRow {
    pub resolution: f64,
    pub err_l2: f64,
    pub rate_l2: Option<f64>,
    pub err_h1_sq: f64,
    pub rate_h1: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateTable {
    /// "dt" or "h".
    pub resolution_label: String,
    pub rows: Vec<RateRow>,
}

/// rate_i = log(e_{i-1}/e_i) / log(r_{i-1}/r_i), defined from the second row
/// on; exact on pure power data e = C r^p.
pub fn rates_from_errors(rows: &[(f64, f64)]) -> Vec<Option<f64>> {
    let mut out = vec![None; rows.len()];
    for i in 1..rows.len() {
        let (r0, e0) = rows[i - 1];
        let (r1, e1) = rows[i];
        if e0 > 0.0 && e1 > 0.0 && r0 != r1 {
            out[i] = Some((e0 / e1).ln() / (r0 / r1).ln());
        }
    }
    out
}

impl RateTable {
    /// Assemble from (resolution, max L2, integrated squared H1) rows. The L2
    /// rate comes from the tabulated value; the H1 rate from the norm, i.e.
    /// the square root of the tabulated integral.
    pub fn from_error_rows(label: &str, rows: &[(f64, f64, f64)]) -> Self {
        let l2: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
        let h1_norm: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.2.sqrt())).collect();
        let rate_l2 = rates_from_errors(&l2);
        let rate_h1 = rates_from_errors(&h1_norm);
        RateTable {
            resolution_label: label.to_string(),
            rows: rows
                .iter()
                .zip(rate_l2.into_iter().zip(rate_h1))
                .map(|(&(resolution, err_l2, err_h1_sq), (rl, rh))| RateRow {
                    resolution,
                    err_l2,
                    rate_l2: rl,
                    err_h1_sq,
                    rate_h1: rh,
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{},err_l2,rate_l2,err_h1_sq,rate_h1\n", self.resolution_label);
        for r in &self.rows {
            let fmt_rate = |x: Option<f64>| x.map(|v| format!("{v:.2}")).unwrap_or_default();
            s.push_str(&format!(
                "{:.10e},{:.10e},{},{:.10e},{}\n",
                r.resolution,
                r.err_l2,
                fmt_rate(r.rate_l2),
                r.err_h1_sq,
                fmt_rate(r.rate_h1),
            ));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:<12} {:<14} {:<6} {:<16} {:<6}\n",
            self.resolution_label, "max ||u-u_h||", "rate", "int ||grad e||^2", "rate"
        );
        for r in &self.rows {
            let fmt_rate =
                |x: Option<f64>| x.map(|v| format!("{v:.2}")).unwrap_or_else(|| "--".into());
            s.push_str(&format!(
                "{:<12.6e} {:<14.6e} {:<6} {:<16.6e} {:<6}\n",
                r.resolution,
                r.err_l2,
                fmt_rate(r.rate_l2),
                r.err_h1_sq,
                fmt_rate(r.rate_h1),
            ));
        }
        s
    }

    pub fn defined_rates(&self) -> Vec<f64> {
        self.rows
            .iter()
            .flat_map(|r| [r.rate_l2, r.rate_h1])
            .flatten()
            .collect()
    }
}

// ---------------------------------------------------------------------------
// trajectory capture and error norms

/// Velocity coefficient snapshots on one space at increasing times.
#[derive(Clone, Debug, Default)]
pub struct VelocitySeries {
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
}

impl VelocitySeries {
    pub fn push(&mut self, t: f64, v: Vec<f64>) {
        self.times.push(t);
        self.fields.push(v);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

const TIME_MATCH_TOL: f64 = 1e-9;

/// Error norms between a stream and a reference stream sharing its time grid
/// on the window: (max over coincident steps of the L2 norm, right-rectangle
/// integral of the squared H1-seminorm), both of the difference. The
/// reference is subsampled at the coarse stream's coincident steps.
pub fn error_norms(
    space: &FESpace,
    coarse: &VelocitySeries,
    reference: &VelocitySeries,
    window: (f64, f64),
) -> Result<(f64, f64), VerifyError> {
    let mut max_l2 = 0.0f64;
    let mut int_h1 = 0.0f64;
    let mut matched = 0usize;
    let mut prev_t: Option<f64> = None;
    let mut j = 0usize;
    for (i, &t) in coarse.times.iter().enumerate() {
        if t < window.0 - TIME_MATCH_TOL || t > window.1 + TIME_MATCH_TOL {
            continue;
        }
        while j < reference.times.len() && reference.times[j] < t - TIME_MATCH_TOL {
            j += 1;
        }
        if j >= reference.times.len() || (reference.times[j] - t).abs() > TIME_MATCH_TOL {
            continue;
        }
        matched += 1;
        let diff: Vec<f64> = coarse.fields[i]
            .iter()
            .zip(&reference.fields[j])
            .map(|(a, b)| a - b)
            .collect();
        let n = norms(space, &diff);
        max_l2 = max_l2.max(n.l2);
        if let Some(t0) = prev_t {
            int_h1 += (t - t0) * n.h1_semi * n.h1_semi;
        }
        prev_t = Some(t);
    }
    if matched == 0 {
        return Err(VerifyError::NoCoincidentTimes);
    }
    Ok((max_l2, int_h1))
}

// ---------------------------------------------------------------------------
// study configuration

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Time,
    Space,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StudyScale {
    #[default]
    Desk,
    /// Full benchmark-table configuration; hours of runtime, gated behind an
    /// explicit flag in the front end.
    Paper,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub kind: StudyKind,
    #[serde(default)]
    pub scale: StudyScale,
    pub window_t0: f64,
    pub window_t1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    pub base: RunConfig,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self, crate::io::ConfigError> {
        let cfg: StudyConfig = toml::from_str(text)?;
        cfg.base.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("study config serializes")
    }

    /// Benchmark table-in-time configuration (gated paper scale).
    pub fn paper_time() -> Self {
        let mut base = RunConfig::benchmark_scaled();
        base.mesh_lc = Some(1.0 / 36.0);
        base.t_end = 1.3;
        StudyConfig {
            kind: StudyKind::Time,
            scale: StudyScale::Paper,
            window_t0: 1.0,
            window_t1: 1.3,
            dt_list: Some(vec![8e-3, 6e-3, 4e-3, 2e-3]),
            dt_ref: Some(1e-3),
            h0: None,
            alpha: None,
            levels: None,
            base,
        }
    }

    /// Benchmark table-in-space configuration (gated paper scale).
    pub fn paper_space() -> Self {
        let mut base = RunConfig::benchmark_scaled();
        base.dt = 5e-3;
        base.t_end = 1.5;
        StudyConfig {
            kind: StudyKind::Space,
            scale: StudyScale::Paper,
            window_t0: 1.0,
            window_t1: 1.5,
            dt_list: None,
            dt_ref: None,
            h0: Some(1.0 / 60.0),
            alpha: Some(0.75),
            levels: Some(5),
            base,
        }
    }

    /// Scaled-down time study that completes at desk scale.
    pub fn desk_time() -> Self {
        let mut base = RunConfig::benchmark_scaled();
        base.mesh_lc = Some(1.0 / 16.0);
        base.t_end = 1.3;
        StudyConfig {
            kind: StudyKind::Time,
            scale: StudyScale::Desk,
            window_t0: 1.0,
            window_t1: 1.3,
            dt_list: Some(vec![8e-3, 4e-3, 2e-3]),
            dt_ref: Some(1e-3),
            h0: None,
            alpha: None,
            levels: None,
            base,
        }
    }
}

// ---------------------------------------------------------------------------
// time-rate study

fn capture_run(
    base: &RunConfig,
    dt: f64,
    window: (f64, f64),
    stride_of: impl Fn(usize) -> bool,
) -> Result<(VelocitySeries, Arc<FESpace>), VerifyError> {
    let mut cfg = base.clone();
    cfg.dt = dt;
    cfg.output_dir = None;
    let mut series = VelocitySeries::default();
    let out = run_transient_observed(&cfg, |state, _| {
        if state.t >= window.0 - TIME_MATCH_TOL
            && state.t <= window.1 + TIME_MATCH_TOL
            && stride_of(state.n)
        {
            series.push(state.t, state.v.clone());
        }
    })?;
    Ok((series, out.space))
}

/// One run per dt plus a fine-step reference on the same mesh; errors of each
/// run against the reference at coincident steps in the window.
pub fn time_rate_study(
    base: &RunConfig,
    dt_list: &[f64],
    dt_ref: f64,
    window: (f64, f64),
) -> Result<RateTable, VerifyError> {
    if dt_list.is_empty() {
        return Err(VerifyError::TooFewLevels { need: 1, got: 0 });
    }
    let mut ratios = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let ratio = dt / dt_ref;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(VerifyError::NonNestedSteps { dt, dt_ref });
        }
        ratios.push(ratio.round() as usize);
    }
    // capture the reference wherever any coarse grid has a step
    let (reference, space) = capture_run(base, dt_ref, window, |n| {
        ratios.iter().any(|&r| n % r == 0)
    })?;
    let mut rows = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let (series, _) = capture_run(base, dt, window, |_| true)?;
        let (max_l2, int_h1) = error_norms(&space, &series, &reference, window)?;
        rows.push((dt, max_l2, int_h1));
    }
    Ok(RateTable::from_error_rows("dt", &rows))
}

// ---------------------------------------------------------------------------
// space-rate study

/// Locates points of one mesh inside another and evaluates quadratic fields
/// there, for cross-resolution differences.
pub struct CrossMeshInterpolator {
    /// Per fine node: source element and reference coordinates in it.
    targets: Vec<(usize, [f64; 2])>,
}

impl CrossMeshInterpolator {
    pub fn new(coarse: &FESpace, fine: &FESpace) -> Self {
        let mesh = coarse.mesh();
        let verts = mesh.vertices();
        // uniform background bins over the coarse mesh
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in verts {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        let cell = (mesh.h_max() * 1.5).max(1e-12);
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
        let bin_of = |x: f64, y: f64| -> (usize, usize) {
            let i = (((x - lo[0]) / cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let j = (((y - lo[1]) / cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
            (i, j)
        };
        let mut bins: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
        for (e, tri) in mesh.triangles().iter().enumerate() {
            let (mut bl, mut bh) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for &v in tri {
                for d in 0..2 {
                    bl[d] = bl[d].min(verts[v][d]);
                    bh[d] = bh[d].max(verts[v][d]);
                }
            }
            let (i0, j0) = bin_of(bl[0], bl[1]);
            let (i1, j1) = bin_of(bh[0], bh[1]);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    bins[j * nx + i].push(e);
                }
            }
        }

        let bary = |e: usize, p: [f64; 2]| -> [f64; 3] {
            let tri = mesh.triangles()[e];
            let a = verts[tri[0]];
            let b = verts[tri[1]];
            let c = verts[tri[2]];
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
            let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
            [1.0 - l1 - l2, l1, l2]
        };

        let targets = fine
            .node_coords()
            .iter()
            .map(|&p| {
                let (bi, bj) = bin_of(p[0], p[1]);
                // search the point's bin ring-by-ring, keeping the element
                // where the point is least outside; boundary-mismatch points
                // end up clamped into the nearest element
                let mut best: (f64, usize, [f64; 3]) = (f64::NEG_INFINITY, 0, [0.0; 3]);
                for radius in 0..=nx.max(ny) {
                    let (ilo, ihi) = (bi.saturating_sub(radius), (bi + radius).min(nx - 1));
                    let (jlo, jhi) = (bj.saturating_sub(radius), (bj + radius).min(ny - 1));
                    for j in jlo..=jhi {
                        for i in ilo..=ihi {
                            // only the new ring
                            if radius > 0 && i > ilo && i < ihi && j > jlo && j < jhi {
                                continue;
                            }
                            for &e in &bins[j * nx + i] {
                                let l = bary(e, p);
                                let min_l = l[0].min(l[1]).min(l[2]);
                                if min_l > best.0 {
                                    best = (min_l, e, l);
                                }
                            }
                        }
                    }
                    if best.0 >= -1e-10 {
                        break;
                    }
                    if radius >= 2 && best.0 > f64::NEG_INFINITY {
                        // already have a close candidate; one extra ring is
                        // enough for clamping
                        break;
                    }
                }
                let mut l = best.2;
                for li in &mut l {
                    *li = li.max(0.0);
                }
                let sum: f64 = l.iter().sum();
                (best.1, [l[1] / sum, l[2] / sum])
            })
            .collect();
        CrossMeshInterpolator { targets }
    }

    /// Evaluate a coarse velocity field at the fine space's nodes.
    pub fn apply(&self, coarse: &FESpace, u: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.targets.len());
        for &(e, xi) in &self.targets {
            let v = eval_velocity_at(coarse, u, e, xi);
            out.push(v[0]);
            out.push(v[1]);
        }
        out
    }
}

/// Difference norms between two same-grid series where the coarse one has
/// already been mapped onto the fine space.
pub fn series_difference_norms(
    space: &FESpace,
    a: &VelocitySeries,
    b: &VelocitySeries,
    window: (f64, f64),
) -> Result<(f64, f64), VerifyError> {
    error_norms(space, a, b, window)
}

/// Meshes at h0 * alpha^i; solutions on consecutive resolutions are compared
/// on the finer space (the coarse solution interpolated over), giving the
/// ratio-of-differences order estimate p with d_i / d_{i+1} = alpha^{-p}.
pub fn space_rate_study(
    base: &RunConfig,
    h0: f64,
    alpha: f64,
    levels: usize,
    window: (f64, f64),
) -> Result<RateTable, VerifyError> {
    if levels < 3 {
        return Err(VerifyError::TooFewLevels { need: 3, got: levels });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(VerifyError::BadStudyConfig {
            field: "alpha",
            message: format!("must lie in (0, 1), got {alpha}"),
        });
    }
    let mut resolutions = Vec::with_capacity(levels);
    let mut captured: Vec<(VelocitySeries, Arc<FESpace>)> = Vec::with_capacity(levels);
    for i in 0..levels {
        let h = h0 * alpha.powi(i as i32);
        let mut cfg = base.clone();
        match cfg.mesh_kind {
            MeshKind::Circles => cfg.mesh_lc = Some(h),
            MeshKind::Square => cfg.mesh_n = Some((1.0 / h).round().max(1.0) as usize),
            MeshKind::File => {
                return Err(VerifyError::BadStudyConfig {
                    field: "mesh_kind",
                    message: "space study needs a generated mesh family (circles or square)".into(),
                })
            }
        }
        let (series, space) = capture_run(&cfg, cfg.dt, window, |_| true)?;
        resolutions.push(h);
        captured.push((series, space));
    }

    let mut rows = Vec::with_capacity(levels - 1);
    for i in 0..levels - 1 {
        let (coarse_series, coarse_space) = &captured[i];
        let (fine_series, fine_space) = &captured[i + 1];
        let interp = CrossMeshInterpolator::new(coarse_space, fine_space);
        let mut mapped = VelocitySeries::default();
        for (t, field) in coarse_series.times.iter().zip(&coarse_series.fields) {
            mapped.push(*t, interp.apply(coarse_space, field));
        }
        let (max_l2, int_h1) = error_norms(fine_space, &mapped, fine_series, window)?;
        rows.push((resolutions[i], max_l2, int_h1));
    }
    Ok(RateTable::from_error_rows("h", &rows))
}

/// Run a study config (front-end entry point).
pub fn run_study(study: &StudyConfig) -> Result<RateTable, VerifyError> {
    match study.kind {
        StudyKind::Time => {
            let dt_list = study.dt_list.clone().ok_or(VerifyError::BadStudyConfig {
                field: "dt_list",
                message: "required for a time study".into(),
            })?;
            let dt_ref = study.dt_ref.ok_or(VerifyError::BadStudyConfig {
                field: "dt_ref",
                message: "required for a time study".into(),
            })?;
            time_rate_study(&study.base, &dt_list, dt_ref, (study.window_t0, study.window_t1))
        }
        StudyKind::Space => {
            let h0 = study.h0.ok_or(VerifyError::BadStudyConfig {
                field: "h0",
                message: "required for a space study".into(),
            })?;
            let alpha = study.alpha.ok_or(VerifyError::BadStudyConfig {
                field: "alpha",
                message: "required for a space study".into(),
            })?;
            let levels = study.levels.ok_or(VerifyError::BadStudyConfig {
                field: "levels",
                message: "required for a space study".into(),
            })?;
            space_rate_study(&study.base, h0, alpha, levels, (study.window_t0, study.window_t1))
        }
    }
}

/// Acceptance evaluation of a time-rate table: every defined rate of both
/// columns within [0.8, 1.6].
pub fn time_rates_acceptable(table: &RateTable) -> bool {
    let rates = table.defined_rates();
    !rates.is_empty() && rates.iter().all(|&r| (0.8..=1.6).contains(&r))
}

/// Acceptance evaluation of a space-rate table: the mean over the last two
/// difference pairs, pooled across both norm columns, within [1.5, 2.5].
pub fn space_rates_acceptable(table: &RateTable) -> bool {
    let tail: Vec<f64> = table
        .rows
        .iter()
        .rev()
        .take(2)
        .flat_map(|r| [r.rate_l2, r.rate_h1])
        .flatten()
        .collect();
    if tail.is_empty() {
        return false;
    }
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    (1.5..=2.5).contains(&mean)
}

// ---------------------------------------------------------------------------
// manufactured solutions

type VecField = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;
type MatField = Arc<dyn Fn([f64; 2], f64) -> [[f64; 2]; 2] + Send + Sync>;
type ScalarField = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;

/// A manufactured solution with every derivative supplied in closed form.
#[derive(Clone)]
pub struct MmsCase {
    pub u: VecField,
    pub grad_u: MatField,
    pub du_dt: VecField,
    pub laplace_u: VecField,
    pub p: ScalarField,
    pub grad_p: ScalarField2,
}

pub type ScalarField2 = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;

impl MmsCase {
    /// Divergence-free trigonometric field from the stream function
    /// sin(pi x) sin(pi y) s(t), with pressure cos(pi x) cos(pi y) s(t).
    /// `omega = 0` freezes the time profile (steady case).
    pub fn trig(omega: f64) -> Self {
        let pi = std::f64::consts::PI;
        let s = move |t: f64| if omega == 0.0 { 1.0 } else { 1.0 + 0.5 * (omega * t).sin() };
        let s_dot = move |t: f64| if omega == 0.0 { 0.0 } else { 0.5 * omega * (omega * t).cos() };
        MmsCase {
            u: Arc::new(move |x, t| {
                let sv = s(t);
                [
                    (pi * x[0]).sin() * (pi * x[1]).cos() * sv,
                    -(pi * x[0]).cos() * (pi * x[1]).sin() * sv,
                ]
            }),
            grad_u: Arc::new(move |x, t| {
                let sv = s(t);
                [
                    [
                        pi * (pi * x[0]).cos() * (pi * x[1]).cos() * sv,
                        -pi * (pi * x[0]).sin() * (pi * x[1]).sin() * sv,
                    ],
                    [
                        pi * (pi * x[0]).sin() * (pi * x[1]).sin() * sv,
                        -pi * (pi * x[0]).cos() * (pi * x[1]).cos() * sv,
                    ],
                ]
            }),
            du_dt: Arc::new(move |x, t| {
                let sd = s_dot(t);
                [
                    (pi * x[0]).sin() * (pi * x[1]).cos() * sd,
                    -(pi * x[0]).cos() * (pi * x[1]).sin() * sd,
                ]
            }),
            laplace_u: Arc::new(move |x, t| {
                let sv = s(t);
                [
                    -2.0 * pi * pi * (pi * x[0]).sin() * (pi * x[1]).cos() * sv,
                    2.0 * pi * pi * (pi * x[0]).cos() * (pi * x[1]).sin() * sv,
                ]
            }),
            p: Arc::new(move |x, t| (pi * x[0]).cos() * (pi * x[1]).cos() * s(t)),
            grad_p: Arc::new(move |x, t| {
                let sv = s(t);
                [
                    -pi * (pi * x[0]).sin() * (pi * x[1]).cos() * sv,
                    -pi * (pi * x[0]).cos() * (pi * x[1]).sin() * sv,
                ]
            }),
        }
    }

    /// Quadratic velocity / linear pressure: u = (y^2, x^2), p = x + y - 1.
    /// The Taylor-Hood pair reproduces it exactly.
    pub fn polynomial() -> Self {
        MmsCase {
            u: Arc::new(|x, _| [x[1] * x[1], x[0] * x[0]]),
            grad_u: Arc::new(|x, _| [[0.0, 2.0 * x[1]], [2.0 * x[0], 0.0]]),
            du_dt: Arc::new(|_, _| [0.0, 0.0]),
            laplace_u: Arc::new(|_, _| [2.0, 2.0]),
            p: Arc::new(|x, _| x[0] + x[1] - 1.0),
            grad_p: Arc::new(|_, _| [1.0, 1.0]),
        }
    }

    /// Check div u = 0 at sample points in closed form.
    pub fn check_divergence_free(&self) -> Result<(), VerifyError> {
        for i in 0..7 {
            for j in 0..7 {
                let x = [i as f64 / 6.0, j as f64 / 6.0];
                for t in [0.0, 0.37, 1.41] {
                    let g = (self.grad_u)(x, t);
                    let div = g[0][0] + g[1][1];
                    if div.abs() > 1e-10 {
                        return Err(VerifyError::NotDivergenceFree(div.abs(), x));
                    }
                }
            }
        }
        Ok(())
    }

    /// Body force f = u_t + (u . grad) u - nu lap u + grad p compatible with
    /// the exact solution; convection dropped in Stokes mode.
    pub fn forcing(&self, nu: f64, include_convection: bool) -> crate::solver::BodyForce {
        let u = Arc::clone(&self.u);
        let grad_u = Arc::clone(&self.grad_u);
        let du_dt = Arc::clone(&self.du_dt);
        let laplace_u = Arc::clone(&self.laplace_u);
        let grad_p = Arc::clone(&self.grad_p);
        Arc::new(move |x, t| {
            let ut = du_dt(x, t);
            let lap = laplace_u(x, t);
            let gp = grad_p(x, t);
            let mut f = [
                ut[0] - nu * lap[0] + gp[0],
                ut[1] - nu * lap[1] + gp[1],
            ];
            if include_convection {
                let uv = u(x, t);
                let g = grad_u(x, t);
                f[0] += uv[0] * g[0][0] + uv[1] * g[0][1];
                f[1] += uv[0] * g[1][0] + uv[1] * g[1][1];
            }
            f
        })
    }
}

fn mms_space(n: usize) -> (Arc<FESpace>, crate::mesh::WallDistanceField) {
    let mesh = Arc::new(crate::mesh::build_structured_square(n).unwrap());
    let tags: std::collections::BTreeSet<i32> = mesh.boundary_tags().into_iter().collect();
    let wall = crate::mesh::compute_wall_distance(&mesh, &tags).unwrap();
    (Arc::new(FESpace::new(mesh, &tags)), wall)
}

fn mms_stepper(
    case: &MmsCase,
    nu: f64,
    space: Arc<FESpace>,
    wall: &crate::mesh::WallDistanceField,
    include_convection: bool,
) -> Result<Stepper, VerifyError> {
    // pure flow solve: the eddy-viscosity model never activates
    let params = ModelParams { nu, t_star: f64::INFINITY, ..Default::default() };
    let u = Arc::clone(&case.u);
    let opts = StepperOptions {
        viscous_form: ViscousForm::FullGradient,
        convection: include_convection,
        force: case.forcing(nu, include_convection),
        boundary: Some(Arc::new(move |x, t| u(x, t))),
        ..Default::default()
    };
    Ok(Stepper::new(space, wall, params, opts)?)
}

/// Errors of the discrete steady solution against a steady manufactured
/// solution, by driving the implicit stepper with a long pseudo-time step
/// until the fixed point (the steady Galerkin solution) is reached.
pub fn mms_steady_errors(
    case: &MmsCase,
    nu: f64,
    n: usize,
    include_convection: bool,
) -> Result<fem::Norms, VerifyError> {
    case.check_divergence_free()?;
    let (space, wall) = mms_space(n);
    let mut stepper = mms_stepper(case, nu, Arc::clone(&space), &wall, include_convection)?;
    let u0 = Arc::clone(&case.u);
    let mut state = State {
        v: interpolate_velocity(&space, |x| u0(x, 0.0)),
        p: vec![0.0; space.n_pressure_dofs()],
        k: None,
        t: 0.0,
        n: 0,
    };
    let dt = 1e3;
    let mut converged = false;
    for _ in 0..60 {
        let (next, _) = stepper.step(&state, dt).map_err(VerifyError::Solver)?;
        let delta: f64 = next
            .v
            .iter()
            .zip(&state.v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = next.v.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
        // keep the pseudo-time frozen so boundary data stays at t = 0
        state = State { t: 0.0, n: 0, ..next };
        if delta <= 1e-13 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(VerifyError::SteadyNoConvergence(60));
    }
    let u = Arc::clone(&case.u);
    let gu = Arc::clone(&case.grad_u);
    Ok(fem::velocity_error_vs_exact(
        &space,
        &state.v,
        |x| u(x, 0.0),
        |x| gu(x, 0.0),
    ))
}

/// Spatial convergence of the steady manufactured solution over a mesh
/// family; returns (resolutions, L2 errors, H1 errors) and the regression
/// slopes (order estimates).
pub fn mms_spatial_study(
    case: &MmsCase,
    nu: f64,
    ns: &[usize],
    include_convection: bool,
) -> Result<(Vec<(f64, f64, f64)>, f64, f64), VerifyError> {
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let e = mms_steady_errors(case, nu, n, include_convection)?;
        rows.push((1.0 / n as f64, e.l2, e.h1_semi));
    }
    let slope = |sel: fn(&(f64, f64, f64)) -> f64| -> f64 {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0.ln(), sel(r).ln())).collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    let l2_order = slope(|r| r.1);
    let h1_order = slope(|r| r.2);
    Ok((rows, l2_order, h1_order))
}

/// Temporal convergence on a fixed mesh: time-dependent manufactured
/// solution, errors of each dt against a fine-step discrete reference on the
/// same mesh (the spatial error cancels in the difference).
pub fn mms_temporal_study(
    case: &MmsCase,
    nu: f64,
    n: usize,
    dt_list: &[f64],
    dt_ref: f64,
    t_end: f64,
) -> Result<RateTable, VerifyError> {
    case.check_divergence_free()?;
    let (space, wall) = mms_space(n);
    let window = (0.0, t_end);

    let run = |dt: f64, capture: &dyn Fn(usize) -> bool| -> Result<VelocitySeries, VerifyError> {
        let mut stepper = mms_stepper(case, nu, Arc::clone(&space), &wall, true)?;
        let u0 = Arc::clone(&case.u);
        let mut state = State {
            v: interpolate_velocity(&space, |x| u0(x, 0.0)),
            p: vec![0.0; space.n_pressure_dofs()],
            k: None,
            t: 0.0,
            n: 0,
        };
        let steps = (t_end / dt - 1e-9).ceil() as usize;
        let mut series = VelocitySeries::default();
        if capture(0) {
            series.push(0.0, state.v.clone());
        }
        for _ in 0..steps {
            let (next, _) = stepper.step(&state, dt).map_err(VerifyError::Solver)?;
            state = next;
            if capture(state.n) {
                series.push(state.t, state.v.clone());
            }
        }
        Ok(series)
    };

    let mut ratios = Vec::new();
    for &dt in dt_list {
        let r = dt / dt_ref;
        if (r - r.round()).abs() > 1e-9 || r < 1.0 {
            return Err(VerifyError::NonNestedSteps { dt, dt_ref });
        }
        ratios.push(r.round() as usize);
    }
    let ratios_for_ref = ratios.clone();
    let reference = run(dt_ref, &move |n| ratios_for_ref.iter().any(|&r| n % r == 0))?;
    let mut rows = Vec::new();
    for &dt in dt_list {
        let series = run(dt, &|_| true)?;
        let (max_l2, int_h1) = error_norms(&space, &series, &reference, window)?;
        rows.push((dt, max_l2, int_h1));
    }
    Ok(RateTable::from_error_rows("dt", &rows))
}

// ---------------------------------------------------------------------------
// scalar ODE oracles

#[derive(Clone, Debug, Serialize)]
pub struct OdeCheck {
    pub name: &'static str,
    pub pass: bool,
    pub observed: f64,
    pub detail: String,
}

/// Compare both k updates against closed-form solutions of the scalar ODE
/// for constant and piecewise-constant coefficient paths.
pub fn ode_oracle_suite() -> Vec<OdeCheck> {
    let tau = 0.1;
    let a = 0.5 * std::f64::consts::SQRT_2 / tau;
    let mut checks = Vec::new();

    // homogeneous decay: exact stepping matches k0 exp(-a t) to 1e-12
    {
        let (k0, dt, steps) = (2.5, 0.01, 100);
        let mut k = k0;
        for _ in 0..steps {
            k = k_update_exact(k, dt, tau, 0.0).unwrap();
        }
        let truth = k0 * (-a * dt * steps as f64).exp();
        let err = (k - truth).abs() / truth;
        checks.push(OdeCheck {
            name: "exact_free_decay",
            pass: err <= 1e-12,
            observed: err,
            detail: format!("relative defect {err:.3e} against k0 exp(-sqrt2 t / (2 tau))"),
        });
    }

    // BE global error is first order against the constant-coefficient
    // closed form
    {
        let (k0, eps, t_end) = (1.0, 3.0, 1.0);
        let truth = k0 * ((eps - a) * t_end).exp();
        let global_err = |dt: f64| {
            let steps = (t_end / dt).round() as usize;
            let mut k = k0;
            for _ in 0..steps {
                k = k_update_be(k, dt, tau, eps).unwrap();
            }
            (k - truth).abs()
        };
        let e1 = global_err(1.0 / 128.0);
        let e2 = global_err(1.0 / 256.0);
        let order = (e1 / e2).log2();
        checks.push(OdeCheck {
            name: "be_global_order",
            pass: (0.9..=1.1).contains(&order),
            observed: order,
            detail: format!("halving study order {order:.3}"),
        });
    }

    // piecewise-constant coefficient: exact stepping equals the product of
    // exponentials
    {
        let (k0, dt) = (0.7, 0.05);
        let eps_path = [0.0, 2.0, 5.0, 1.0, 8.0, 0.5];
        let mut k = k0;
        let mut exponent = 0.0;
        for (i, &eps) in eps_path.iter().enumerate() {
            // hold each eps for a few steps
            let holds = 3 + i % 2;
            for _ in 0..holds {
                k = k_update_exact(k, dt, tau, eps).unwrap();
                exponent += (eps - a) * dt;
            }
        }
        let truth = k0 * exponent.exp();
        let err = (k - truth).abs() / truth.abs().max(1e-300);
        checks.push(OdeCheck {
            name: "piecewise_exponential",
            pass: err <= 1e-12,
            observed: err,
            detail: format!("relative defect {err:.3e} against the piecewise closed form"),
        });
    }

    checks
}

// ---------------------------------------------------------------------------
