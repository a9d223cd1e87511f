use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod experiments;

use config::{ConfigError, Experiment};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(ConfigError),
    #[error("cannot write artifact {0}")]
    Io(String),
    #[error("experiment aborted: {0}")]
    Experiment(String),
    #[error("assertion failed for: {}", .0.join(", "))]
    Assertion(Vec<String>),
}

impl RunError {
    fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "nullcone",
    version,
    about = "Run null-distance experiments from TOML configs"
)]
struct Cli {
    /// List the experiments and the operation each one runs.
    #[arg(long)]
    list: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Overrides `sampling.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), RunError> {
    let loaded = config::load(&config).map_err(RunError::Config)?;
    let seed = seed.unwrap_or(loaded.config.sampling.seed);
    let out = out
        .or_else(|| loaded.config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    println!("{} (seed {seed})", loaded.config.experiment);
    let outcome = experiments::run(&loaded, seed, &out)?;
    for line in &outcome.summary {
        println!("  {line}");
    }
    for a in &outcome.artifacts {
        println!("  wrote {}", a.display());
    }
    if outcome.failing_rows.is_empty() {
        println!("PASS");
        Ok(())
    } else {
        Err(RunError::Assertion(outcome.failing_rows))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list {
        for e in Experiment::ALL {
            println!("{:<22} {}", e.name(), e.describe());
        }
        return ExitCode::SUCCESS;
    }
    let Some(Command::Run { config, seed, out }) = cli.command else {
        eprintln!("nothing to do; try `nullcone --list` or `nullcone run <config>`");
        return ExitCode::from(2);
    };
    match run(config, seed, out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if matches!(e, RunError::Assertion(_)) {
                println!("FAIL");
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
