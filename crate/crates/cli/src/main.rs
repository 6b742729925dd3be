//! `moyalrel`: builds relativistic Wigner functions, evolves them, checks
//! the quantization conditions and tabulates spectra, writing plot-ready
//! CSV or JSON.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Format;

/// Failures, each with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(#[from] moyalrel::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "moyalrel", version, about = "Relativistic Weyl–Wigner–Moyal toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Four-component Wigner function of a coherent packet, its total and a summary.
    CoherentWigner(Common),
    /// Liouville evolution of the four components; `--oracle` compares with
    /// the exact two-component propagation.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        oracle: bool,
    },
    /// Checks a component against the quantization condition; exit code 1 on failure.
    CheckQuantization(Common),
    /// Relativistic harmonic levels on both branches.
    Spectrum(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set packet.sigma_q=0.1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Common {
    fn resolve(&self) -> Result<config::RunConfig, CliError> {
        let mut cfg = config::load(self.config.as_deref(), &self.set)?;
        if let Some(dir) = &self.output {
            cfg.output.path = dir.clone();
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        Ok(cfg)
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MOYALREL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("MOYALREL_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("MOYALREL_THREADS: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::CoherentWigner(c) => commands::coherent_wigner(&c.resolve()?),
        Command::Evolve { common, oracle } => commands::evolve(&common.resolve()?, oracle),
        Command::CheckQuantization(c) => commands::check_quantization(&c.resolve()?),
        Command::Spectrum(c) => commands::spectrum(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("moyalrel: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
