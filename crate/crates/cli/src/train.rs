use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use cadgym_core::optim::{run_simulation, CurriculumStatus, SimConfig, SyntheticRegistry, SyntheticSpec};

use crate::settings::{load_config, output_path, usage, write_output};

#[derive(clap::Args)]
pub struct Args {
    /// Synthetic perplexity model.
    #[arg(long, default_value = "geometric-decay")]
    policy: String,
    /// Starting (and validation) perplexity of the model.
    #[arg(long, default_value_t = SyntheticSpec::default().initial)]
    initial: f64,
    /// Per-step decay factor for decaying models.
    #[arg(long, default_value_t = SyntheticSpec::default().rate)]
    rate: f64,
    /// Overrides curriculum.alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Overrides curriculum.levels.
    #[arg(long)]
    levels: Option<usize>,
    /// Overrides curriculum.max_iter_per_level.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Overrides the simulation seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Trace output file (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(config: Option<&Path>, args: Args) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let mut curriculum = cfg.curriculum;
    if let Some(a) = args.alpha {
        curriculum.alpha = a;
    }
    if let Some(l) = args.levels {
        curriculum.levels = l;
    }
    if let Some(m) = args.max_iter {
        curriculum.max_iter_per_level = m;
    }
    curriculum.validate().map_err(|e| usage(e.to_string()))?;
    let registry = SyntheticRegistry::standard();
    let spec = SyntheticSpec { initial: args.initial, rate: args.rate };
    let synthetic = registry
        .build(&args.policy, &spec)
        .ok_or_else(|| usage(format!("unknown synthetic policy {:?}; known: {}", args.policy, registry.names().join(", "))))?;
    let sim = SimConfig {
        curriculum,
        grpo: cfg.grpo.params(),
        baseline: cfg.grpo.baseline,
        group_size: cfg.grpo.group_size,
        learning_rate: cfg.grpo.learning_rate,
        seed: args.seed.unwrap_or(cfg.seeds.simulation),
        ..SimConfig::default()
    };
    let trace = run_simulation(synthetic.as_ref(), &sim).map_err(|e| usage(e.to_string()))?;

    println!("policy {} alpha {} levels {}", trace.policy, curriculum.alpha, curriculum.levels);
    println!("{:>5} {:>12} {:>7} {:>9}", "level", "threshold", "steps", "completed");
    for l in &trace.levels {
        println!("{:>5} {:>12.6} {:>7} {:>9}", l.level, l.threshold, l.steps, l.completed);
    }
    if let Some(last) = trace.losses.last() {
        println!(
            "policy updates {}, last grpo loss {:.6}, bc loss {:.6}, mean reward {:.4}",
            trace.losses.len(),
            last.grpo_loss,
            last.bc_loss,
            last.mean_reward
        );
    }
    println!("status {:?} at level {} after {} steps", trace.status, trace.final_level, trace.total_steps);
    if let Some(path) = output_path(args.out, &cfg, "curriculum_trace.json") {
        write_output(&path, &(serde_json::to_string_pretty(&trace)? + "\n"))?;
    }
    Ok(match trace.status {
        CurriculumStatus::Finished => ExitCode::SUCCESS,
        _ => ExitCode::from(1),
    })
}
