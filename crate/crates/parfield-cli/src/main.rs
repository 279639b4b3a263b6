//! `parfield`: density profiles, caustics, closed orbits and total currents
//! for a point source in parallel electric and magnetic fields.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Config, Origin};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Csv(PathBuf, csv::Error),
    #[error("json: {0}")]
    Json(String),
    #[error(transparent)]
    Lib(parfield::Error),
    #[error("method {0}: {1}")]
    Method(&'static str, parfield::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(..) | CliError::Csv(..) | CliError::Json(_) => 1,
            CliError::Lib(e) | CliError::Method(_, e) => match e {
                parfield::Error::Domain(_) => 2,
                parfield::Error::Convergence { .. } | parfield::Error::Series { .. } | parfield::Error::Refinement(_) => 3,
                parfield::Error::Unsupported(_) | parfield::Error::Divergence(_) => 4,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "parfield", version, about = "Point source in parallel electric and magnetic fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key = value scenario file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: current directory; `scales` writes nothing unless given).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated methods for `profile`: classical, semiclassical, uniform, quantum.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Worker threads (default: hardware threads).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Series tolerance, overrides numerics.tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Override any config key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the scales report as JSON.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derived scales η, ε, d, β.
    Scales,
    /// Radial density profiles on the detector plane, one CSV per method.
    Profile,
    /// Caustic curves and irregular points per cycle.
    Caustics,
    /// Closed orbits and where they cross the detector plane.
    Orbits,
    /// Total current J(E) over an energy sweep.
    CrossSection,
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut c = Config::with_defaults();
    if let Some(p) = &cli.config {
        c.load_file(p)?;
    }
    c.apply_env(|v| std::env::var(v).ok())?;
    for s in &cli.set {
        c.apply_assignment(s)?;
    }
    if let Some(m) = &cli.method {
        c.set("profile.methods", m, Origin::Flag)?;
    }
    if let Some(t) = cli.tolerance {
        c.set("numerics.tolerance", &t.to_string(), Origin::Flag)?;
    }
    Ok(c)
}

fn run(cli: &Cli) -> Result<commands::Outcome, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let c = load_config(cli)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    match cli.command {
        Command::Scales => {
            let (text, outcome) = commands::scales(&c, cli.out.as_deref(), cli.json)?;
            print!("{text}");
            Ok(outcome)
        }
        Command::Profile => commands::profile(&c, &dir),
        Command::Caustics => commands::caustics(&c, &dir),
        Command::Orbits => commands::orbits(&c, &dir),
        Command::CrossSection => commands::cross_section(&c, &dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if !matches!(cli.command, Command::Scales) {
                for f in &outcome.files {
                    println!("wrote {}", f.display());
                }
            }
            match outcome.failure {
                None => ExitCode::SUCCESS,
                Some(e) => {
                    eprintln!("parfield: {e}");
                    ExitCode::from(e.code())
                }
            }
        }
        Err(e) => {
            eprintln!("parfield: {e}");
            ExitCode::from(e.code())
        }
    }
}
