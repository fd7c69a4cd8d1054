//! `decaylab`: runs one solver or a figure preset and writes a CSV table with
//! a JSON sidecar.
//!
//! Exit status: 0 on success, 2 for an invalid experiment, 3 when a solver or
//! fit fails, 4 on I/O errors.

mod output;
mod run;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use decaylab_core::config::RunConfig;
use decaylab_core::Error;
use thiserror::Error as ThisError;

use crate::spec::{FitRequest, Options};

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("solver failed: {0}")]
    Solver(Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Spec(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::InvalidGrid(_) | Error::Config(_) | Error::DimensionMismatch { .. } => {
                CliError::Spec(e.to_string())
            }
            _ => CliError::Solver(e),
        }
    }
}

const AFTER_HELP: &str = "\
Solvers: master, trajectory, coherent, spectral, jc, jc-spectrum, walk, walk-exact
Presets: fig1b, fig2a, fig2bc, fig3a, fig3b, fig4b

Rates and times are in units of the hopping J (t is Jt at J = 1).
Exit status: 0 ok, 2 invalid experiment, 3 solver failure, 4 I/O error.";

#[derive(Debug, Parser)]
#[command(name = "decaylab", version, about = "Spontaneous emission into a dephased coupled-cavity waveguide", after_help = AFTER_HELP)]
struct Cli {
    /// Solver or preset to run
    target: String,
    /// Flat TOML file with run parameters; flags take precedence
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Photon hopping rate
    #[arg(long = "J", value_name = "J")]
    j: Option<f64>,
    /// Emitter-cavity coupling
    #[arg(long)]
    g0: Option<f64>,
    /// Photon dephasing rate
    #[arg(long)]
    gamma: Option<f64>,
    /// Detuning of the emitter from the cavities
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Number of cavities kept in the truncated waveguide
    #[arg(long = "N", value_name = "N")]
    n_sites: Option<usize>,
    /// Final time
    #[arg(long)]
    tmax: Option<f64>,
    /// Output points, endpoints included
    #[arg(long)]
    points: Option<usize>,
    /// Integration step
    #[arg(long)]
    dt: Option<f64>,
    /// Seed of the stochastic trajectories
    #[arg(long)]
    seed: Option<u64>,
    /// Number of stochastic trajectories
    #[arg(long)]
    trajectories: Option<usize>,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Fit applied to every decay curve: exp:lo:hi, pow:lo:hi or plateau:alpha:lo:hi
    #[arg(long, value_name = "SPEC")]
    fit: Vec<FitRequest>,
    /// Also integrate the walk rate equations (walk solver)
    #[arg(long)]
    ode: bool,
    /// Upper end of the gamma/g0 sweep (jc-spectrum, default 16)
    #[arg(long, value_name = "RATIO")]
    ratio_max: Option<f64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            RunConfig::from_toml_str(&text)?
        }
        None => RunConfig::default(),
    };
    let flags = RunConfig {
        j: cli.j,
        g0: cli.g0,
        gamma: cli.gamma,
        delta: cli.delta,
        n_sites: cli.n_sites,
        t_max: cli.tmax,
        points: cli.points,
        dt: cli.dt,
        seed: cli.seed,
        trajectories: cli.trajectories,
    };
    let opts = Options { fits: cli.fit, out: cli.out, ode: cli.ode, ratio_max: cli.ratio_max };

    let spec = spec::build(&cli.target, &file, &flags, &opts)?;
    let outcome = run::execute(&spec)?;
    let (csv, sidecar) = output::write_artifacts(&spec, &outcome)?;

    println!("wrote {}", csv.display());
    println!("wrote {}", sidecar.display());
    for f in &outcome.fits {
        println!("fit {} {}: value {} (rms residual {})", f["curve"], f["kind"], f["value"], f["rmsResidual"]);
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("decaylab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
