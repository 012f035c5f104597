//! `hjinv`: forward and backward Hopf-Lax transforms, reachability reports,
//! envelopes, coincidence sets and membership checks from the command line.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 solver error, 4 a demo check failed.

mod commands;
mod config;
mod demo;
mod manifest;

use clap::{Parser, Subcommand};
use commands::{Direction, XSetChoice};
use config::{InputArgs, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(hj_inverse::Error),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(e) => write!(f, "solver error: {e}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "hjinv", version, about = "Inverse design for Hamilton-Jacobi equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward or backward Hopf-Lax transform of the input
    Transform {
        #[arg(long, value_enum, default_value = "forward")]
        dir: Direction,
        /// Also run the viscous finite-difference solver with this viscosity
        #[arg(long)]
        eps: Option<f64>,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Reachability report of the target (JSON on stdout)
    Reach {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Semiconcave envelope and backward-forward projection of the target
    Envelope {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Minimal initial datum and the set where every admissible datum is pinned
    Xset {
        #[arg(long, value_enum, default_value = "gradient")]
        method: XSetChoice,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Whether a candidate initial datum (spec JSON or CSV) reaches the target
    Member {
        #[arg(long)]
        candidate: PathBuf,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Reproduce a worked example end to end: ex31, ex32, ex33, ex34 or all
    Demo {
        example: String,
        #[arg(long, default_value = commands::DEFAULT_OUT)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Transform { dir, eps, input } => {
            if let Some(e) = eps {
                if !(e > 0.0) || !e.is_finite() {
                    return Err(CliError::Config(format!("--eps must be positive, got {e}")));
                }
            }
            commands::transform(&RunConfig::from_args(&input)?, dir, eps)?;
        }
        Command::Reach { input } => commands::reach(&RunConfig::from_args(&input)?)?,
        Command::Envelope { input } => commands::envelope(&RunConfig::from_args(&input)?)?,
        Command::Xset { method, input } => commands::xset(&RunConfig::from_args(&input)?, method)?,
        Command::Member { candidate, input } => commands::member(&RunConfig::from_args(&input)?, &candidate)?,
        Command::Demo { example, out } => {
            let ids: Vec<&str> = if example == "all" { demo::EXAMPLES.to_vec() } else { vec![example.as_str()] };
            let mut pass = true;
            for id in ids {
                pass &= demo::run(id, &out)?;
            }
            if !pass {
                return Ok(4);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("hjinv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
