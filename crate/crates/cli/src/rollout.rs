use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use cadgym_core::gym::{
    bundled_tasks, load_task_dir, load_trajectories, run_episode, save_trajectories, CorruptionKind, CorruptionSpec, PolicyContext,
    PolicyRegistry, Task, TrajectoryRecord,
};
use cadgym_core::reward::JudgeRegistry;
use rayon::prelude::*;
use serde_json::Value;

use crate::settings::{load_config, output_path, resolve_task, usage, write_output};

#[derive(clap::Args)]
pub struct Args {
    /// Task JSON file or task id.
    #[arg(long, conflicts_with = "batch", required_unless_present = "batch")]
    task: Option<String>,
    /// Run every task in a directory; `bundled` selects the built-in set.
    #[arg(long)]
    batch: Option<String>,
    /// Agent policy name.
    #[arg(long, default_value = "scripted")]
    policy: String,
    /// Recorded trajectories for the replay policy, matched by task id.
    #[arg(long)]
    recorded: Option<PathBuf>,
    /// Judge name.
    #[arg(long, default_value = "reference")]
    judge: String,
    /// Overrides the rollout seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Corruptions applied to scripted programs (comma separated).
    #[arg(long, value_delimiter = ',')]
    corrupt: Vec<String>,
    /// Fraction of eligible steps corrupted per kind; at least one step
    /// is always hit when a kind is enabled.
    #[arg(long, default_value_t = 0.01)]
    corruption_rate: f64,
    /// Trajectory output file (JSON lines).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn corruption(args: &Args) -> Result<CorruptionSpec> {
    if args.corrupt.is_empty() {
        return Ok(CorruptionSpec::none());
    }
    if !(args.corruption_rate > 0.0 && args.corruption_rate <= 1.0) {
        return Err(usage("--corruption-rate must lie in (0, 1]"));
    }
    let kinds = args
        .corrupt
        .iter()
        .map(|k| CorruptionKind::parse(k).ok_or_else(|| usage(format!("unknown corruption {k:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorruptionSpec { kinds, rate: args.corruption_rate })
}

fn label(v: impl serde::Serialize) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => "?".into(),
    }
}

pub fn run(config: Option<&Path>, args: Args) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let spec = corruption(&args)?;
    let seed = args.seed.unwrap_or(cfg.seeds.rollout);
    let tasks: Vec<Task> = match (&args.task, &args.batch) {
        (Some(t), _) => vec![resolve_task(t, &cfg)?],
        (None, Some(b)) if b == "bundled" => bundled_tasks(),
        (None, Some(dir)) => load_task_dir(Path::new(dir)).with_context(|| format!("loading tasks from {dir}"))?,
        (None, None) => unreachable!("clap enforces --task or --batch"),
    };
    if tasks.is_empty() {
        return Err(usage("no tasks to run"));
    }
    let policies = PolicyRegistry::standard();
    if !policies.names().contains(&args.policy.as_str()) {
        return Err(usage(format!("unknown policy {:?}; known: {}", args.policy, policies.names().join(", "))));
    }
    let judges = JudgeRegistry::standard(cfg.metrics.judge_threshold, cfg.metrics.resolution);
    let judge = judges
        .get(&args.judge)
        .ok_or_else(|| usage(format!("unknown judge {:?}; known: {}", args.judge, judges.names().join(", "))))?;
    let recorded: Vec<TrajectoryRecord> = match &args.recorded {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
            load_trajectories(&text).with_context(|| format!("loading {}", p.display()))?
        }
        None => Vec::new(),
    };
    let episode = cfg.episode_config();

    let records = tasks
        .par_iter()
        .map(|task| {
            let ctx = PolicyContext {
                task,
                seed,
                corruption: &spec,
                recorded: recorded.iter().find(|r| r.task_id == task.id),
            };
            let mut policy = policies.build(&args.policy, &ctx)?;
            run_episode(Arc::new(task.clone()), policy.as_mut(), &episode, judge, cfg.reward, seed)
                .with_context(|| format!("rollout of {}", task.id))
        })
        .collect::<Result<Vec<_>>>()?;

    println!("{:<28} {:>8} {:>4} {:>6} {:>4} {:>6} {:>7} termination", "task", "outcome", "orm", "steps", "fmt", "total", "iou");
    for r in &records {
        println!(
            "{:<28} {:>8} {:>4} {:>6.3} {:>4} {:>6.3} {:>7} {}",
            r.task_id,
            label(r.outcome),
            r.reward.orm,
            r.reward.step_mean,
            r.reward.format,
            r.reward.total,
            r.final_iou.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            label(r.termination),
        );
    }
    let text = save_trajectories(&records);
    match output_path(args.out, &cfg, "trajectories.jsonl") {
        Some(path) => {
            write_output(&path, &text)?;
            eprintln!("wrote {} trajectories to {}", records.len(), path.display());
        }
        None => eprintln!("no --out or paths.output_dir set; trajectories not saved"),
    }
    Ok(ExitCode::SUCCESS)
}
