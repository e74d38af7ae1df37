mod eval;
mod fmt;
mod rollout;
mod serve;
mod settings;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use settings::UsageError;

#[derive(Parser)]
#[command(name = "cadgym", version, about = "CSG modeling gym: tool server, rollouts, metrics and curriculum simulation")]
struct Cli {
    /// TOML config file. Seed-consuming commands require one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the tool protocol as line-delimited JSON-RPC on stdin/stdout.
    Serve(serve::Args),
    /// Run agent policies against tasks and write trajectory records.
    Rollout(rollout::Args),
    /// Compare generated programs against references.
    Eval(eval::Args),
    /// Simulate curriculum training with a synthetic perplexity model.
    TrainSim(train::Args),
    /// Check a transcript against the tag-format rules.
    FmtCheck(fmt::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = cli.config.as_deref();
    let result = match cli.command {
        Command::Serve(a) => serve::run(config, a),
        Command::Rollout(a) => rollout::run(config, a),
        Command::Eval(a) => eval::run(config, a),
        Command::TrainSim(a) => train::run(config, a),
        Command::FmtCheck(a) => fmt::run(a),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
