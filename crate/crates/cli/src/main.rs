use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod distance;
mod error;
mod markov;
mod output;
mod selftest;
mod tower;

pub use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "flatspace", version, about = "Quotient, Wasserstein and tower-embedding experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment document (JSON), or a file previously written by this tool.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the atom cap of tower runs.
    #[arg(long, global = true)]
    pub cap: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true, env = "FLATSPACE_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pairwise distances of a point set in a chosen space.
    Distance,
    /// Tower pipeline over a sweep of depths and net sizes.
    Tower,
    /// Exact check of the Markov type 2 inequality on random chains.
    Markov {
        /// Overrides the constant K.
        #[arg(long)]
        k: Option<f64>,
    },
    /// Quick invariant checks of the library.
    Selftest,
}

/// Result of a command that ran to completion.
pub enum Outcome {
    Pass,
    /// An inequality or invariant failed.
    Fail,
}

fn run(cli: Cli) -> CliResult<Outcome> {
    let jobs = match cli.common.jobs {
        Some(0) => return Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Distance => distance::run(&cli.common),
        Command::Tower => tower::run(&cli.common),
        Command::Markov { k } => markov::run(&cli.common, k),
        Command::Selftest => selftest::run(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
