//! `steklov-lab`: batch front end for the weighted Steklov laboratory.

mod config;
mod error;
mod experiments;
mod output;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{Command, RunConfig};
use error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "steklov-lab", version, about = "Weighted Steklov spectra, optimization and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// JSON run configuration; unset fields take their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory, overrides `output_dir`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// worker threads for independent grid points
    #[arg(long, global = true, env = "STEKLOV_LAB_THREADS")]
    threads: Option<usize>,
    /// overrides `optimizer.seed` and seeds the selftest weights
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Steklov spectrum of the configured weight
    Spectrum,
    /// minimize E for the configured (s, t)
    Optimize,
    /// warm-started minimizations along `grids.t`
    Sweep,
    /// spectra of the bubbling test family over `grids.epsilon`
    Testfamily,
    /// ellipse eigenvalue indices over `grids.p`
    Ellipse,
    /// bracket for the critical axis ratio
    Thetastar,
    /// optimize, then write the surface as OBJ and boundary CSV
    Export,
    /// built-in checks; nonzero exit on any failure
    Selftest {
        /// truncation used by the spectral checks
        #[arg(long, default_value_t = 64)]
        solver_n: usize,
    },
}

fn fail(command: &str, e: &CliError) -> ExitCode {
    let record = json!({
        "status": "error",
        "exit_code": e.exit_code(),
        "kind": e.kind(),
        "command": command,
        "message": e.to_string(),
    });
    eprintln!("{record}");
    ExitCode::from(e.exit_code() as u8)
}

fn experiment(cli: &Cli, command: Command) -> Result<serde_json::Value, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.optimizer.seed = seed;
    }
    cfg.validate(command)?;
    let threads = cli.threads.unwrap_or(1);
    if threads == 0 {
        return Err(CliError::Config("threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let hash = cfg.hash(command);
    let outcome = experiments::run(command, &cfg, &hash, &pool)?;
    let files = outcome.artifacts.write(&cfg.output_dir)?;
    if !outcome.violations.is_empty() {
        return Err(CliError::Invariant(outcome.violations.join("; ")));
    }
    let names: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
    Ok(experiments::summary(command, &hash, &names))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("", &CliError::Config(e.to_string().lines().next().unwrap_or("").to_string())),
    };
    let command = match cli.command {
        Sub::Spectrum => Command::Spectrum,
        Sub::Optimize => Command::Optimize,
        Sub::Sweep => Command::Sweep,
        Sub::Testfamily => Command::Testfamily,
        Sub::Ellipse => Command::Ellipse,
        Sub::Thetastar => Command::Thetastar,
        Sub::Export => Command::Export,
        Sub::Selftest { solver_n } => {
            let (report, code) = selftest::run(solver_n, cli.seed.unwrap_or(0));
            print!("{report}");
            if code != 0 {
                let e = if code == 3 {
                    CliError::Resolution("selftest failures at the requested resolution".into())
                } else {
                    CliError::Invariant("selftest failures".into())
                };
                return fail("selftest", &e);
            }
            return ExitCode::SUCCESS;
        }
    };
    match experiment(&cli, command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(command.name(), &e),
    }
}
