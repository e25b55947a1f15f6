//! `densmap` command-line driver.

mod commands;
mod config;
mod error;
mod output;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::RunConfig;
use crate::error::{CliError, EXIT_NUMERICAL};
use crate::output::Output;

#[derive(Parser)]
#[command(name = "densmap", version, about = "Real-space density-potential laboratory")]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one configuration key; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Propagate the initial state and record norm, dipole and density.
    Propagate,
    /// Lowest eigenpairs of the static Hamiltonian.
    Spectrum,
    /// Fixed-point density-to-potential inversion.
    InvertFp,
    /// Single-particle Hamilton-Jacobi inversion.
    InvertHj,
    /// Kohn-Sham potential of a two-electron density.
    InvertKs,
    /// Taylor-coefficient inversion at t = 0.
    InvertTaylor,
    /// Check a potential against a target density.
    VerifyRho,
    /// Linear response: Lehmann kernel, delta kick or Kubo formula.
    Respond,
    /// Local-density functional components of a radial density.
    Functionals,
    /// Norm, continuity, weight, force-balance and Sobolev diagnostics.
    Diagnose,
    /// Print every configuration key with its default.
    Keys,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Propagate => "propagate",
            Command::Spectrum => "spectrum",
            Command::InvertFp => "invert-fp",
            Command::InvertHj => "invert-hj",
            Command::InvertKs => "invert-ks",
            Command::InvertTaylor => "invert-taylor",
            Command::VerifyRho => "verify-rho",
            Command::Respond => "respond",
            Command::Functionals => "functionals",
            Command::Diagnose => "diagnose",
            Command::Keys => "keys",
        }
    }

    fn run(self, cfg: &RunConfig, out: &mut Output) -> Result<Outcome, CliError> {
        match self {
            Command::Propagate => commands::propagate(cfg, out),
            Command::Spectrum => commands::spectrum_cmd(cfg, out),
            Command::InvertFp => commands::invert_fp(cfg, out),
            Command::InvertHj => commands::invert_hj(cfg, out),
            Command::InvertKs => commands::invert_ks(cfg, out),
            Command::InvertTaylor => commands::invert_taylor(cfg, out),
            Command::VerifyRho => commands::verify_rho(cfg, out),
            Command::Respond => commands::respond(cfg, out),
            Command::Functionals => commands::functionals(cfg, out),
            Command::Diagnose => commands::diagnose(cfg, out),
            Command::Keys => unreachable!("handled before any output"),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("DENSMAP_THREADS") else {
        return Ok(());
    };
    let threads = raw
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Validation(format!("DENSMAP_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Validation(format!("cannot size the thread pool: {e}")))
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("densmap: {err}");
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Keys = cli.command {
        print!("{}", config::schema_table());
        return ExitCode::SUCCESS;
    }
    let cfg = match configure_threads().and_then(|()| RunConfig::load(cli.config.as_deref(), &cli.overrides)) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e),
    };
    let dir = cfg.path("io.outdir").unwrap_or_else(|| PathBuf::from("out"));
    let mut out = match Output::create(&dir) {
        Ok(out) => out,
        Err(e) => return fail(&e),
    };

    let start = Instant::now();
    let result = cli.command.run(&cfg, &mut out);
    let (status, code) = match &result {
        Ok(Outcome { failure: None }) => ("ok".to_string(), ExitCode::SUCCESS),
        Ok(Outcome { failure: Some(why) }) => {
            eprintln!("densmap: {why}");
            (format!("numerical failure: {why}"), ExitCode::from(EXIT_NUMERICAL))
        }
        Err(e @ CliError::Validation(_)) => (format!("invalid input: {e}"), fail(e)),
        Err(e) => (format!("numerical failure: {e}"), fail(e)),
    };
    if let Err(e) = out.manifest(cli.command.name(), &cfg, start.elapsed(), &status) {
        eprintln!("densmap: {e}");
        if result.is_ok() {
            return ExitCode::from(EXIT_NUMERICAL);
        }
    }
    code
}
