//! `floquet`: experiment runner for the decohered Floquet code.
//!
//! Exit codes: 0 success, 1 validation error, 2 verification failure,
//! 3 budget exceeded.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use config::*;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "floquet", version, about = "Experiment runner for the decohered honeycomb Floquet code")]
struct Cli {
    /// TOML file with one table per subcommand; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "FLOQUET_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximum-likelihood (or matching) decoding fidelity over sizes and rates.
    DecodeSweep(DecodeSweepArgs),
    /// Renyi relative entropy and coherent information from partition functions.
    Diagnostics(DiagnosticsArgs),
    /// Nishimori-line RBIM threshold or flavor-model defect free energies.
    Statmech(StatmechArgs),
    /// Differential checks: oracle vs stat-mech, enumeration vs RBIM.
    Verify(VerifyArgs),
    /// Write the colored torus lattice.
    DumpLattice(DumpLatticeArgs),
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Verification(String),
    Budget(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Budget(m) => write!(f, "budget exceeded: {m}"),
        }
    }
}

impl From<floquet::Error> for CliError {
    fn from(e: floquet::Error) -> Self {
        match e {
            floquet::Error::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            floquet::Error::Inconsistent(_) => CliError::Verification(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("json: {e}"))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::DecodeSweep(a) => {
            let a = a.merge(file.decode_sweep);
            let io = output::Paths::new(a.out.clone(), a.summary.clone());
            commands::decode_sweep(&DecodeSweepConfig::resolve(a)?, &io)
        }
        Command::Diagnostics(a) => {
            let a = a.merge(file.diagnostics);
            let io = output::Paths::new(a.out.clone(), a.summary.clone());
            commands::diagnostics(&DiagnosticsConfig::resolve(a)?, &io)
        }
        Command::Statmech(a) => {
            let a = a.merge(file.statmech);
            let io = output::Paths::new(a.out.clone(), a.summary.clone());
            commands::statmech(&StatmechConfig::resolve(a)?, &io)
        }
        Command::Verify(a) => {
            let a = a.merge(file.verify);
            let io = output::Paths::new(a.out.clone(), None);
            commands::verify(&VerifyConfig::resolve(a)?, &io)
        }
        Command::DumpLattice(a) => {
            let a = a.merge(file.dump_lattice);
            let io = output::Paths::new(a.out.clone(), None);
            commands::dump_lattice(&DumpLatticeConfig::resolve(a)?, &io)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
