//! `crl`: batch front end for the coarse-ricci library.
//!
//! Exit codes: 0 success, 1 input or configuration error, 2 a verification
//! failed (the report, with its witness, is still written).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "crl", version, about = "Coarse Ricci curvature of random walks on finite metric spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a space file and report its basic shape.
    Validate {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Curvature of every pair, optionally with a sampled contraction check.
    Curvature {
        input: PathBuf,
        /// Random measure pairs for the contraction check; 0 skips it.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Build the lifted space on the simplex grid and compare curvature infima.
    Lift {
        input: PathBuf,
        /// Exit 2 unless the lifted and base infima agree within --tol.
        #[arg(long)]
        verify: bool,
        /// Also write the lifted space as a space file.
        #[arg(long)]
        export: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Invariant measure, uniqueness from random starts, lifted invariance
    /// and reversibility.
    Invariant {
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        starts: usize,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Convergence traces toward the invariant measure.
    Dynamics {
        input: PathBuf,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Label of the starting Dirac; the first point by default.
        #[arg(long)]
        start: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Convergence of walks along approximation maps and curvature stability.
    Gh {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Observable-diameter estimates with witnesses.
    Obsdiam {
        input: PathBuf,
        /// A single kappa; the scalar observable diameter when absent.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value = "combined")]
        strategy: String,
        #[arg(long, default_value_t = 32)]
        budget: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Observable diameters of a family, its scaling and its lifted spaces.
    Levy {
        config: PathBuf,
        #[arg(long, default_value_t = 16)]
        budget: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Transport exponent, 1 <= p < inf.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Simplex grid denominator for lifted spaces.
    #[arg(long, default_value_t = 2)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; all available cores by default.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Report path; stdout by default.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Validate { common, .. }
            | Command::Curvature { common, .. }
            | Command::Lift { common, .. }
            | Command::Invariant { common, .. }
            | Command::Dynamics { common, .. }
            | Command::Gh { common, .. }
            | Command::Obsdiam { common, .. }
            | Command::Levy { common, .. } => common,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CRL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; help and version are not errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let common = cli.command.common().clone();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(common.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| commands::run(&cli.command)) {
        Ok(outcome) => {
            if let Err(e) = outcome.write(common.out.as_deref()) {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
            match outcome.failure {
                None => ExitCode::SUCCESS,
                Some(msg) => {
                    eprintln!("verification failed: {msg}");
                    ExitCode::from(2)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
