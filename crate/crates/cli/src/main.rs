//! `walllaw`: cell problems, wall laws and convergence studies for Poisson
//! flow over a periodically rough wall.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use walllaw::Error;

use crate::commands::MeshKind;
use crate::config::Config;

const EXIT_VALIDATION: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

#[derive(Parser)]
#[command(name = "walllaw", version, about)]
struct Cli {
    /// TOML configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `run.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, overriding `run.jobs`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve both cell problems, cross-check them and write trace data.
    Cell,
    /// Run the convergence study and write errors.csv, orders.csv, manifest.txt.
    Experiment,
    /// Run the invariant suite and print a pass/fail matrix.
    Verify {
        /// Skip the convergence study.
        #[arg(long)]
        quick: bool,
        /// Also check that this field file belongs to the configured cell mesh.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Export a mesh: rough, smooth, strip or layer.
    Mesh {
        #[arg(long, default_value = "rough")]
        kind: MeshKind,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
}

/// Solver-side failures exit with 2, everything else with 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    let solver = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<Error>(),
            Some(
                Error::Coercivity(_)
                    | Error::Indefinite { .. }
                    | Error::SolverFailure { .. }
                    | Error::InterfaceNonConvergence { .. }
            )
        )
    });
    if solver {
        EXIT_SOLVER
    } else {
        EXIT_VALIDATION
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let (cfg, base) = match &cli.config {
        Some(p) => (Config::load(p)?, p.parent().map(PathBuf::from).unwrap_or_default()),
        None => (Config::default(), PathBuf::from(".")),
    };
    let mut res = cfg.resolve(&base)?;
    if let Some(out) = cli.out {
        res.out = out;
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            anyhow::bail!("--jobs must be at least 1");
        }
        res.plan.jobs = jobs;
    }
    // a second initialization (tests calling run twice) is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(res.plan.jobs).build_global();
    commands::ensure_dir(&res.out)?;
    match cli.command {
        Command::Cell => {
            commands::cell(&res)?;
            Ok(0)
        }
        Command::Experiment => {
            let report = commands::experiment(&res)?;
            Ok(if report.all_ok() { 0 } else { EXIT_SOLVER })
        }
        Command::Verify { quick, field } => {
            let ok = commands::verify(&res, quick, field.as_deref())?;
            Ok(if ok { 0 } else { EXIT_ACCEPTANCE })
        }
        Command::Mesh { kind, epsilon } => {
            commands::mesh(&res, kind, epsilon)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
