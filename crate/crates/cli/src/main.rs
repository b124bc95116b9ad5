//! `pblab`: command-line front end of the numerical laboratory.

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::commands::*;
use crate::config::{layer, resolve_global, ConfigFile, Failure, GlobalFlags, Precision};
use crate::run::{Command, Completed};

#[derive(Parser)]
#[command(name = "pblab", version, about = "Beta ensembles, quantum Painleve II and ODE/IM numerics")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML file with a [global] section and one section per command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `pblab-out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the command's integration tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    precision: Option<Precision>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw eigenvalue configurations of the Gaussian beta-ensemble.
    Sample(SampleArgs),
    /// Monte Carlo (and quadrature) residuals of the Virasoro constraints.
    VirasoroCheck(VirasoroArgs),
    /// Residuals of the Fuchsian or confluent BPZ equations.
    BpzCheck(BpzArgs),
    /// Solve the quantum Painleve II equation on a grid.
    QpiiSolve(QpiiArgs),
    /// Tracy-Widom table from the QPII solution at kappa = beta / 2.
    TwTable(TwTableArgs),
    /// Empirical soft-edge CDF of the tridiagonal beta-ensemble.
    TwEmpirical(TwEmpiricalArgs),
    /// Integrate the pole dynamics.
    PolesRun(PolesArgs),
    /// Residuals of the governing equations along a trajectory.
    GoverningCheck(PoleCheckArgs),
    /// Residual of the Hirota bilinear equation along a trajectory.
    HirotaCheck(PoleCheckArgs),
    /// Zero-curvature residual on- and off-shell.
    LaxCheck(LaxArgs),
    /// Reconstruct the linear-system solution along a contour.
    Reconstruct(ReconstructArgs),
    /// Eigenvalues as zeros of the spectral determinant.
    OdeimSpectrum(SpectrumArgs),
    /// Quantum Wronskian residual on complex energies.
    QwronskianCheck(QWronskianArgs),
    /// Solve the Bethe equations of an excited-state potential.
    BetheSolve(BetheArgs),
    /// Re-run a recorded run and verify its artifacts bit for bit.
    Replay {
        /// Path to a manifest.json.
        manifest: PathBuf,
    },
}

fn params<C: Command, F: Serialize>(
    file: &ConfigFile,
    flags: &F,
    tol: Option<f64>,
) -> Result<(&'static str, serde_json::Value), Failure> {
    let c: C = layer(C::NAME, file, flags, tol)?;
    Ok((C::NAME, serde_json::to_value(c).expect("configs serialize to JSON")))
}

fn run(cli: Cli) -> Result<Completed, Failure> {
    let g = cli.global;
    if let Cmd::Replay { manifest } = &cli.command {
        if g.config.is_some() || g.seed.is_some() || g.tol.is_some() || g.precision.is_some() {
            return Err(Failure::invalid("replay takes its configuration from the manifest; only --out applies"));
        }
        return run::replay(manifest, g.out.as_deref());
    }
    let file = match &g.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    if let Some(bad) = file.section_names().find(|s| !NAMES.contains(s)) {
        return Err(Failure::invalid(format!("config section [{bad}] is not a command")));
    }
    let flags = GlobalFlags {
        seed: g.seed,
        precision: g.precision,
        out: g.out,
        tol: g.tol,
    };
    let res = resolve_global(&file, &flags);
    let tol = res.tol;
    let (name, config) = match &cli.command {
        Cmd::Sample(a) => params::<SampleConfig, _>(&file, a, tol),
        Cmd::VirasoroCheck(a) => params::<VirasoroConfig, _>(&file, a, tol),
        Cmd::BpzCheck(a) => params::<BpzConfig, _>(&file, a, tol),
        Cmd::QpiiSolve(a) => params::<QpiiConfig, _>(&file, a, tol),
        Cmd::TwTable(a) => params::<TwTableConfig, _>(&file, a, tol),
        Cmd::TwEmpirical(a) => params::<TwEmpiricalConfig, _>(&file, a, tol),
        Cmd::PolesRun(a) => params::<PolesConfig, _>(&file, a, tol),
        Cmd::GoverningCheck(a) => params::<GoverningConfig, _>(&file, a, tol),
        Cmd::HirotaCheck(a) => params::<HirotaConfig, _>(&file, a, tol),
        Cmd::LaxCheck(a) => params::<LaxConfig, _>(&file, a, tol),
        Cmd::Reconstruct(a) => params::<ReconstructConfig, _>(&file, a, tol),
        Cmd::OdeimSpectrum(a) => params::<SpectrumConfig, _>(&file, a, tol),
        Cmd::QwronskianCheck(a) => params::<QWronskianConfig, _>(&file, a, tol),
        Cmd::BetheSolve(a) => params::<BetheConfig, _>(&file, a, tol),
        Cmd::Replay { .. } => unreachable!("handled above"),
    }?;
    run::execute(name, config, res.global, &res.out)
}

/// Caps the worker pool at `PBLAB_THREADS` when set.
fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("PBLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Failure::invalid(format!("PBLAB_THREADS = `{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Failed(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = init_threads().and_then(|()| run(cli));
    match result {
        Ok(done) => {
            let m = &done.manifest;
            println!("{}: {}", m.command, done.report);
            println!(
                "wrote {} artifact(s) and {} to {} (config_hash {})",
                m.artifacts.len(),
                run::MANIFEST,
                done.dir.display(),
                &m.config_hash[..16]
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pblab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
