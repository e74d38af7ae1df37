use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use cadgym_core::protocol::{serve, Session, ToolRegistry};

use crate::settings::{load_optional_config, write_output};

#[derive(clap::Args)]
pub struct Args {
    /// Write the executed tool calls and observations as JSON lines.
    #[arg(long)]
    record: Option<PathBuf>,
}

pub fn run(config: Option<&Path>, args: Args) -> Result<ExitCode> {
    let cfg = load_optional_config(config)?;
    let session = Session::new(ToolRegistry::standard(), cfg.geometry.clone());
    let stdin = io::stdin().lock();
    let stdout = BufWriter::new(io::stdout().lock());
    let (log, status) = serve(stdin, stdout, session);
    if let Some(path) = args.record {
        let mut text = String::new();
        for step in &log {
            let line = serde_json::json!({"call": step.call, "observation": step.observation});
            text.push_str(&serde_json::to_string(&line)?);
            text.push('\n');
        }
        write_output(&path, &text)?;
    }
    status?;
    Ok(ExitCode::SUCCESS)
}
