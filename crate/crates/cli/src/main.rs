//! Command-line front end: configured runs, convergence-rate studies,
//! offline verification of run artifacts, manufactured-solution checks, and
//! the scalar-ODE oracles.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use halfeq_core::driver::{check_run_dir, run_transient};
use halfeq_core::io::RunConfig;
use halfeq_core::verify::{
    self, mms_spatial_study, mms_temporal_study, ode_oracle_suite, run_study, MmsCase,
    StudyConfig, StudyKind, StudyScale,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "halfeq", version, about = "2D incompressible-flow solver with a scalar-TKE eddy-viscosity model")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a configured transient simulation.
    Run {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Validate the configuration and exit without writing anything.
        #[arg(long)]
        dry_run: bool,
        /// Override the configured output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Convergence-rate studies (self-convergence in time or space).
    Rates {
        /// TOML study configuration; defaults to the built-in study for the
        /// chosen direction.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Rate in time (runs at several dt against a fine-dt reference).
        #[arg(long)]
        time: bool,
        /// Rate in space (ratios of differences across mesh resolutions).
        #[arg(long)]
        space: bool,
        /// Permit the full benchmark-table configuration (hours of runtime).
        #[arg(long)]
        paper_scale: bool,
        /// Directory for the rate table artifacts.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Only run the synthetic power-law self-test of the estimators.
        #[arg(long)]
        synthetic_self_test: bool,
    },
    /// Verify the discrete identities of a completed run directory.
    Check {
        /// Run directory containing stats.csv.
        dir: PathBuf,
    },
    /// Manufactured-solution verification of the flow core.
    Mms {
        /// Spatial order study only.
        #[arg(long)]
        spatial: bool,
        /// Temporal order study only.
        #[arg(long)]
        temporal: bool,
    },
    /// Closed-form oracle checks of the scalar k updates.
    OdeOracle,
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run { config, dry_run, output } => cmd_run(&config, dry_run, output),
        Cmd::Rates { config, time, space, paper_scale, output, synthetic_self_test } => {
            cmd_rates(config, time, space, paper_scale, output, synthetic_self_test)
        }
        Cmd::Check { dir } => cmd_check(&dir),
        Cmd::Mms { spatial, temporal } => cmd_mms(spatial, temporal),
        Cmd::OdeOracle => cmd_ode_oracle(),
    }
}

fn cmd_run(config: &PathBuf, dry_run: bool, output: Option<PathBuf>) -> Result<()> {
    let mut cfg = RunConfig::from_path(config)?;
    if let Some(out) = output {
        cfg.output_dir = Some(out);
    }
    if dry_run {
        println!("configuration valid");
        return Ok(());
    }
    if cfg.output_dir.is_none() {
        bail!("no output directory: set `output_dir` in the config or pass --output");
    }
    let out = run_transient(&cfg)?;
    println!(
        "run complete: {} steps to t = {:.6}, artifacts in {}",
        out.final_state.n,
        out.final_state.t,
        cfg.output_dir.as_ref().unwrap().display()
    );
    if let Some(k) = out.final_state.k {
        println!("final k = {:.6e}", k.value);
    }
    Ok(())
}

fn estimator_self_test() -> Result<()> {
    let mut ok = true;
    for p in [1.0f64, 2.0, 3.0] {
        let resolutions: [f64; 4] = [8e-3, 4e-3, 2e-3, 1e-3];
        let rows: Vec<(f64, f64)> = resolutions.iter().map(|&r| (r, 3.1 * r.powf(p))).collect();
        let rates = verify::rates_from_errors(&rows);
        let worst = rates.iter().flatten().map(|r| (r - p).abs()).fold(0.0f64, f64::max);
        let pass = worst <= 1e-10;
        ok &= pass;
        println!("{} estimator, p = {p}: worst defect {worst:.3e}", verdict(pass));

        // ratio-of-differences form at alpha = 3/4
        let alpha: f64 = 0.75;
        let h0 = 1.0 / 60.0;
        let diffs: Vec<(f64, f64)> = (0..4)
            .map(|i| {
                let h = h0 * alpha.powi(i);
                (h, h.powf(p) * (1.0 - alpha.powf(p)))
            })
            .collect();
        let rates = verify::rates_from_errors(&diffs);
        let worst = rates.iter().flatten().map(|r| (r - p).abs()).fold(0.0f64, f64::max);
        let pass = worst <= 1e-10;
        ok &= pass;
        println!("{} alpha-ratio estimator, p = {p}: worst defect {worst:.3e}", verdict(pass));
    }
    if !ok {
        bail!("estimator self-test failed");
    }
    Ok(())
}

fn cmd_rates(
    config: Option<PathBuf>,
    time: bool,
    space: bool,
    paper_scale: bool,
    output: Option<PathBuf>,
    synthetic_self_test: bool,
) -> Result<()> {
    if synthetic_self_test {
        return estimator_self_test();
    }
    if time == space {
        bail!("choose exactly one of --time or --space");
    }
    let study = match config {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let study = StudyConfig::from_toml(&text)?;
            let wants = if time { StudyKind::Time } else { StudyKind::Space };
            if study.kind != wants {
                bail!("study config is a {:?} study but the flag asks for {:?}", study.kind, wants);
            }
            study
        }
        None if time && paper_scale => StudyConfig::paper_time(),
        None if time => StudyConfig::desk_time(),
        None if paper_scale => StudyConfig::paper_space(),
        None => bail!("no built-in desk-scale space study; provide --config"),
    };
    if study.scale == StudyScale::Paper && !paper_scale {
        bail!("this is a paper-scale study (hours of runtime); pass --paper-scale to confirm");
    }

    let table = run_study(&study)?;
    print!("{}", table.to_text());
    if let Some(dir) = output {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("rate_table.csv"), table.to_csv())?;
        std::fs::write(dir.join("rate_table.txt"), table.to_text())?;
        std::fs::write(dir.join("study_config.toml"), study.to_toml())?;
        println!("rate table written to {}", dir.display());
    }
    if study.scale == StudyScale::Paper {
        let pass = match study.kind {
            StudyKind::Time => verify::time_rates_acceptable(&table),
            StudyKind::Space => verify::space_rates_acceptable(&table),
        };
        println!(
            "{} paper-scale {} rates within the accepted band",
            verdict(pass),
            if study.kind == StudyKind::Time { "time" } else { "space" }
        );
        if !pass {
            bail!("paper-scale rate band check failed");
        }
    }
    Ok(())
}

fn cmd_check(dir: &PathBuf) -> Result<()> {
    if !dir.join("stats.csv").exists() {
        bail!("missing artifact: {} has no stats.csv", dir.display());
    }
    let outcomes = check_run_dir(dir)?;
    let mut all = true;
    for o in &outcomes {
        all &= o.pass;
        println!("{} {}: {}", verdict(o.pass), o.name, o.detail);
    }
    let summary = serde_json::json!({
        "dir": dir.display().to_string(),
        "pass": all,
        "checks": outcomes,
    });
    let summary_path = dir.join("check_summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    println!("summary written to {}", summary_path.display());
    if !all {
        bail!("one or more checks failed");
    }
    Ok(())
}

fn cmd_mms(spatial: bool, temporal: bool) -> Result<()> {
    let both = spatial == temporal;
    let mut ok = true;
    if spatial || both {
        let case = MmsCase::trig(0.0);
        let (rows, l2_order, h1_order) = mms_spatial_study(&case, 1.0, &[8, 12, 16], true)?;
        println!("spatial study (steady manufactured solution):");
        println!("{:<10} {:<14} {:<14}", "h", "L2 error", "H1 error");
        for (h, l2, h1) in &rows {
            println!("{h:<10.4e} {l2:<14.6e} {h1:<14.6e}");
        }
        let pass = (l2_order - 3.0).abs() <= 0.2 && (h1_order - 2.0).abs() <= 0.2;
        ok &= pass;
        println!(
            "{} spatial orders: L2 {l2_order:.2} (want 3.0 +- 0.2), H1 {h1_order:.2} (want 2.0 +- 0.2)",
            verdict(pass)
        );
    }
    if temporal || both {
        let case = MmsCase::trig(2.0);
        let dts: Vec<f64> = vec![1.0 / 25.0, 1.0 / 50.0, 1.0 / 100.0];
        let table = mms_temporal_study(&case, 1.0, 16, &dts, 1.0 / 800.0, 0.5)?;
        println!("temporal study (fixed mesh, fine-dt reference):");
        print!("{}", table.to_text());
        let rates: Vec<f64> = table.rows.iter().filter_map(|r| r.rate_l2).collect();
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let pass = (mean - 1.0).abs() <= 0.2;
        ok &= pass;
        println!("{} temporal order {mean:.2} (want 1.0 +- 0.2)", verdict(pass));
    }
    if !ok {
        bail!("manufactured-solution verification failed");
    }
    Ok(())
}

fn cmd_ode_oracle() -> Result<()> {
    let checks = ode_oracle_suite();
    let mut ok = true;
    for c in &checks {
        ok &= c.pass;
        println!("{} {}: {}", verdict(c.pass), c.name, c.detail);
    }
    if !ok {
        bail!("ODE oracle suite failed");
    }
    Ok(())
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}
