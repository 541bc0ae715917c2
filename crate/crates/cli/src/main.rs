//! `dnkg`: command-line front end for the numerical lab.

mod commands;
mod config;
mod output;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::Exit;
use config::{Overrides, RunConfig};
use output::Outputs;

#[derive(Parser)]
#[command(name = "dnkg", version, about = "Damped nonlinear Klein-Gordon multi-soliton lab", allow_negative_numbers = true)]
struct Cli {
    /// Spatial dimension.
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Nonlinearity exponent.
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Damping coefficient.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Integrator tolerance for the reduced dynamics.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Final time for ODE and PDE runs.
    #[arg(long = "t-end", global = true)]
    t_end: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized calibration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Named configuration: flagship, triangle, same-sign-pair, same-sign-triple, smoke.
    #[arg(long, global = true)]
    preset: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the ground state and its constants.
    GroundState,
    /// Linearized spectrum around the ground state.
    Spectrum,
    /// Interaction kernel and derived constants.
    Interaction,
    /// Integrate the reduced center dynamics.
    OdeSim,
    /// Run the field solver with modulation tracking.
    PdeSim,
    /// Evaluate the acceptance criteria.
    VerifyTheorem,
    /// Render a Markdown report from earlier outputs.
    Report {
        /// Directory holding earlier outputs (defaults to --out).
        #[arg(long)]
        from: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<Exit> {
    let overrides = Overrides {
        d: cli.d,
        p: cli.p,
        alpha: cli.alpha,
        tol: cli.tol,
        t_end: cli.t_end,
        seed: cli.seed,
    };
    let out = Outputs::new(&cli.out)?;
    if let Command::Report { from } = &cli.command {
        return report::report(from.as_ref().unwrap_or(&cli.out), &out);
    }
    let cfg = RunConfig::resolve(cli.preset.as_deref(), cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::GroundState => commands::ground_state(&cfg, &out),
        Command::Spectrum => commands::spectrum(&cfg, &out),
        Command::Interaction => commands::interaction(&cfg, &out),
        Command::OdeSim => commands::ode_sim(&cfg, &out),
        Command::PdeSim => commands::pde_sim(&cfg, &out),
        Command::VerifyTheorem => verify::verify_theorem(&cfg, &out),
        Command::Report { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(exit) => ExitCode::from(exit.code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
