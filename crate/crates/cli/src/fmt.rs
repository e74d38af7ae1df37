use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use cadgym_core::protocol::check_transcript;

use crate::settings::usage;

#[derive(clap::Args)]
pub struct Args {
    /// Transcript file.
    transcript: PathBuf,
    /// Print the verdict as JSON.
    #[arg(long)]
    json: bool,
}

pub fn run(args: Args) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.transcript)
        .map_err(|e| usage(format!("cannot read {}: {e}", args.transcript.display())))?;
    let verdict = check_transcript(&text);
    if args.json {
        println!("{}", serde_json::to_string(&verdict)?);
    } else if verdict.ok {
        println!("ok");
    } else {
        println!("invalid");
        for v in &verdict.violations {
            println!("  {v}");
        }
    }
    Ok(if verdict.ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
