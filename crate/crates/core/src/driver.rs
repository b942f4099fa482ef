//! Run orchestration: mesh construction, the spin-up / model phases around
//! the activation time, statistics and snapshot emission, restart, and the
//! offline verification of persisted runs.

use crate::diagnostics::{stability_ledger, BudgetRecord, LedgerParams};
use crate::fem::FESpace;
use crate::io::{
    config::MeshKind, read_state, write_snapshot, write_state, ConfigError, ForceKind, IoError,
    RunConfig, RunMeta, StatsReader, StatsWriter,
};
use crate::mesh::{
    build_offset_circles, build_structured_square, compute_wall_distance,
    compute_wall_distance_analytic, offset_circles_distance, parse_gmsh, Mesh, MeshError,
    WallDistanceField,
};
use crate::model::k_initialize;
use crate::solver::{
    benchmark_force, poincare_constant, BodyForce, KUpdateMode, SolverError, State, StepReport,
    Stepper, StepperOptions,
};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Mesh + wall distance for a configured mesh source. The offset-circles
/// domain gets the analytic distance rule so the damping function is not
/// polluted by boundary faceting.
pub fn build_domain(cfg: &RunConfig) -> Result<(Arc<FESpace>, WallDistanceField), DriverError> {
    let mesh: Arc<Mesh> = match cfg.mesh_kind {
        MeshKind::File => {
            let path = cfg.mesh_path.as_ref().expect("validated");
            let text = std::fs::read_to_string(path)
                .map_err(|source| IoError::Io { path: path.clone(), source })?;
            Arc::new(parse_gmsh(&text)?)
        }
        MeshKind::Square => Arc::new(build_structured_square(cfg.mesh_n.expect("validated"))?),
        MeshKind::Circles => Arc::new(build_offset_circles(cfg.mesh_lc.expect("validated"))?),
    };
    let tags: std::collections::BTreeSet<i32> = mesh.boundary_tags().into_iter().collect();
    let wall = match cfg.mesh_kind {
        MeshKind::Circles => {
            compute_wall_distance_analytic(&mesh, &tags, offset_circles_distance)?
        }
        _ => compute_wall_distance(&mesh, &tags)?,
    };
    Ok((Arc::new(FESpace::new(mesh, &tags)), wall))
}

pub fn body_force(cfg: &RunConfig) -> BodyForce {
    match cfg.force {
        ForceKind::None => Arc::new(|_, _| [0.0, 0.0]),
        ForceKind::Benchmark => benchmark_force(),
    }
}

pub struct RunOutput {
    pub final_state: State,
    pub records: Vec<BudgetRecord>,
    pub meta: RunMeta,
    pub space: Arc<FESpace>,
}

pub fn run_transient(cfg: &RunConfig) -> Result<RunOutput, DriverError> {
    run_transient_observed(cfg, |_, _| {})
}

/// Run the configured transient, invoking the observer on every accepted
/// state (including the initial one, with no step report).
pub fn run_transient_observed(
    cfg: &RunConfig,
    mut observer: impl FnMut(&State, Option<&StepReport>),
) -> Result<RunOutput, DriverError> {
    cfg.validate()?;
    let params = cfg.model_params();
    let (space, wall) = build_domain(cfg)?;
    let opts = StepperOptions {
        viscous_form: cfg.viscous_form,
        k_mode: cfg.k_update,
        convection: true,
        solve_tol: 1e-10,
        force: body_force(cfg),
        boundary: None,
    };
    let mut stepper = Stepper::new(Arc::clone(&space), &wall, params, opts)?;
    let lambda = poincare_constant(&space)?;
    let meta = RunMeta {
        nu: cfg.nu,
        tau: cfg.tau,
        mu: cfg.mu,
        kappa: cfg.kappa,
        dt: cfg.dt,
        t_star: cfg.t_star,
        omega: space.mesh().area(),
        lambda,
        damping: cfg.damping,
        k_update: cfg.k_update,
        viscous_form: cfg.viscous_form,
    };

    let mut state = match &cfg.restart_from {
        Some(path) => read_state(path)?,
        None => State::resting(&space),
    };
    maybe_initialize_k(&mut state, &space, &wall, &params);

    let out_dir = cfg.output_dir.clone();
    let mut stats = match &out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| IoError::Io { path: dir.clone(), source: e })?;
            std::fs::write(dir.join("config.toml"), cfg.to_toml())
                .map_err(|e| IoError::Io { path: dir.clone(), source: e })?;
            Some(StatsWriter::create(&dir.join("stats.csv"), &meta)?)
        }
        None => None,
    };

    let mut records = Vec::new();
    let first = budget_record(&stepper, &state, None);
    if let Some(w) = stats.as_mut() {
        w.write_row(&first)?;
    }
    records.push(first);
    observer(&state, None);
    let snapshot = |state: &State| -> Result<(), DriverError> {
        if let Some(dir) = &out_dir {
            if cfg.snapshot_every > 0 && state.n % cfg.snapshot_every == 0 {
                write_snapshot(&space, state, &dir.join(format!("snapshot_{:06}.vtk", state.n)))?;
            }
        }
        Ok(())
    };
    snapshot(&state)?;

    let n_steps = if cfg.t_end > state.t {
        ((cfg.t_end - state.t) / cfg.dt - 1e-9).ceil() as usize
    } else {
        0
    };
    for _ in 0..n_steps {
        let step_result = stepper.step(&state, cfg.dt);
        let (next, report) = match step_result {
            Ok(ok) => ok,
            Err(e) => {
                // persist the last good state before aborting
                if let Some(dir) = &out_dir {
                    let _ = write_state(&state, &dir.join("final_state.txt"));
                    if let Some(w) = stats.as_mut() {
                        let _ = w.flush();
                    }
                }
                return Err(e.into());
            }
        };
        state = next;
        maybe_initialize_k(&mut state, &space, &wall, &params);
        let rec = budget_record(&stepper, &state, Some(&report));
        if let Some(w) = stats.as_mut() {
            w.write_row(&rec)?;
        }
        records.push(rec);
        observer(&state, Some(&report));
        snapshot(&state)?;
    }

    if let Some(dir) = &out_dir {
        write_state(&state, &dir.join("final_state.txt"))?;
    }
    if let Some(w) = stats.as_mut() {
        w.flush()?;
    }
    Ok(RunOutput { final_state: state, records, meta, space })
}

fn maybe_initialize_k(
    state: &mut State,
    space: &FESpace,
    wall: &WallDistanceField,
    params: &crate::model::ModelParams,
) {
    if state.k.is_none() && state.t >= params.t_star - 1e-9 {
        let mut k = k_initialize(space, wall, params);
        k.time = state.t.max(params.t_star);
        state.k = Some(k);
    }
}

fn budget_record(stepper: &Stepper, state: &State, report: Option<&StepReport>) -> BudgetRecord {
    let ke = 0.5 * stepper.mass().quadratic(&state.v);
    let k = state.k.map(|ks| ks.value).unwrap_or(0.0);
    match report {
        None => BudgetRecord { n: state.n, t: state.t, kinetic_energy: ke, k, ..Default::default() },
        Some(r) => BudgetRecord {
            n: state.n,
            t: state.t,
            kinetic_energy: ke,
            nu_dissipation: r.nu_dissipation,
            nut_dissipation: r.nut_dissipation,
            k,
            forcing_power: r.forcing_power,
            energy_residual: r.energy_residual,
            k_residual: r.k_residual,
            increment_sq: r.increment_sq,
            force_l2_sq: r.force_l2_sq,
            eps: r.eps,
        },
    }
}

/// One verdict of the offline run verification.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub detail: String,
}

pub const ENERGY_RESIDUAL_TOL: f64 = 1e-9;
pub const K_RESIDUAL_TOL: f64 = 1e-14;

/// Re-verify a persisted statistics stream: the per-step identities are
/// recomputed from the budget columns (not trusted from the stored residual
/// columns), k positivity is scanned, and the cumulative stability ledger is
/// rebuilt.
pub fn check_records(meta: &RunMeta, records: &[BudgetRecord]) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let dt = meta.dt;

    // energy identity from columns
    let mut worst_e = 0.0f64;
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let m1 = 2.0 * b.kinetic_energy;
        let m0 = 2.0 * a.kinetic_energy;
        let diss = 2.0 * dt * (b.nu_dissipation + b.nut_dissipation);
        let power = 2.0 * dt * b.forcing_power;
        let r = m1 - m0 + b.increment_sq + diss - power;
        let scale = m1.abs().max(m0.abs()).max(b.increment_sq).max(diss.abs()).max(power.abs());
        if scale > 0.0 {
            worst_e = worst_e.max((r / scale).abs());
        }
    }
    out.push(CheckOutcome {
        name: "energy_identity",
        pass: worst_e <= ENERGY_RESIDUAL_TOL,
        worst: worst_e,
        detail: format!("max recomputed energy residual {worst_e:.3e} (tol {ENERGY_RESIDUAL_TOL:.0e})"),
    });

    // k identity from columns (defining equation of the BE update)
    let mut worst_k = 0.0f64;
    let mut checked = 0usize;
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.k == 0.0 && b.k > 0.0 {
            continue; // initialization row, not produced by the update
        }
        if a.k == 0.0 && b.k == 0.0 {
            continue;
        }
        let r = crate::diagnostics::k_residual(a.k, b.k, dt, meta.tau, b.eps);
        worst_k = worst_k.max(r);
        checked += 1;
    }
    match meta.k_update {
        KUpdateMode::Be => out.push(CheckOutcome {
            name: "k_identity",
            pass: worst_k <= K_RESIDUAL_TOL,
            worst: worst_k,
            detail: format!(
                "max recomputed k residual {worst_k:.3e} over {checked} steps (tol {K_RESIDUAL_TOL:.0e})"
            ),
        }),
        KUpdateMode::Exact => out.push(CheckOutcome {
            name: "k_identity",
            pass: true,
            worst: worst_k,
            detail: format!(
                "exact-update mode: defect against the BE difference equation is O(dt) by design ({worst_k:.3e})"
            ),
        }),
    }

    // positivity
    let min_k = records.iter().map(|r| r.k).fold(f64::INFINITY, f64::min);
    out.push(CheckOutcome {
        name: "k_positivity",
        pass: min_k >= 0.0,
        worst: min_k,
        detail: format!("min k over the run {min_k:.3e}"),
    });

    // cumulative stability bound
    let ledger = stability_ledger(
        records,
        &LedgerParams { nu: meta.nu, tau: meta.tau, dt, omega: meta.omega, lambda: meta.lambda },
    );
    let worst_margin = ledger.iter().map(|r| r.relative_margin).fold(f64::NEG_INFINITY, f64::max);
    let flagged = ledger.iter().filter(|r| r.flagged).count();
    out.push(CheckOutcome {
        name: "stability_ledger",
        pass: flagged == 0,
        worst: if ledger.is_empty() { 0.0 } else { worst_margin },
        detail: format!("{flagged} flagged rows; worst relative margin {worst_margin:.3e}"),
    });

    // stored residual columns
    let stored_e = records.iter().map(|r| r.energy_residual.abs()).fold(0.0f64, f64::max);
    let stored_k = records.iter().map(|r| r.k_residual.abs()).fold(0.0f64, f64::max);
    let stored_pass = stored_e <= ENERGY_RESIDUAL_TOL
        && (meta.k_update == KUpdateMode::Exact || stored_k <= K_RESIDUAL_TOL);
    out.push(CheckOutcome {
        name: "stored_residuals",
        pass: stored_pass,
        worst: stored_e.max(stored_k),
        detail: format!("stored max energy {stored_e:.3e}, k {stored_k:.3e}"),
    });

    out
}

/// Offline verification of a run directory (reads `stats.csv`).
pub fn check_run_dir(dir: &Path) -> Result<Vec<CheckOutcome>, DriverError> {
    let stats = StatsReader::read(&dir.join("stats.csv"))?;
    Ok(check_records(&stats.meta, &stats.records))
}
