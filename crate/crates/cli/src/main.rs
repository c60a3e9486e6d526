//! `qhardy`: evaluations, norms, zeros, Blaschke products, factorizations and
//! boundary traces of slice regular series, driven by JSON configs and flags.
//!
//! Exit codes: 0 success, 1 numerical or certificate failure, 2 input error.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, CommonArgs, JobConfig};

#[derive(Parser, Debug)]
#[command(name = "qhardy", version, about = "Slice regular series on the quaternionic unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Values at the points given by `--at`
    Eval(CommonArgs),
    /// Hardy p-norm estimate
    Norm(CommonArgs),
    /// Zeros in the closed unit ball
    Zeros(CommonArgs),
    /// Blaschke product from a zero list
    Blaschke(CommonArgs),
    /// Zero extraction, or the outer/inner split when `--unit` is given
    Factor(CommonArgs),
    /// Boundary trace on one slice as CSV
    Trace(CommonArgs),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl From<qhardy::Error> for CliError {
    fn from(e: qhardy::Error) -> Self {
        use qhardy::Error as E;
        match e {
            E::InvalidInput(_)
            | E::NotImaginaryUnit { .. }
            | E::NonOrthogonal(_)
            | E::CenterOnBoundary { .. }
            | E::NotSlicePreserving(_)
            | E::MixedSphere { .. }
            | E::CoincidentZeros { .. }
            | E::IdenticallyZero
            | E::SingularAtOrigin(_) => CliError::Input(e.to_string()),
            E::ZeroDivisor(_)
            | E::SingularConjugation(_)
            | E::RootFinding(_)
            | E::Unclassifiable { .. }
            | E::Quadrature(_) => CliError::Numerical(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Sub::Eval(a) => (Command::Eval, a),
        Sub::Norm(a) => (Command::Norm, a),
        Sub::Zeros(a) => (Command::Zeros, a),
        Sub::Blaschke(a) => (Command::Blaschke, a),
        Sub::Factor(a) => (Command::Factor, a),
        Sub::Trace(a) => (Command::Trace, a),
    };
    match JobConfig::resolve(command, args).and_then(|cfg| commands::run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qhardy: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
