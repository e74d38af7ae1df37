//! Episode lifecycle over the modeling tools: tasks, stepping, scoring,
//! scripted policies and trajectory persistence.

mod corruption;
mod episode;
mod policy;
mod replay;
mod store;
mod task;

use std::sync::Arc;

pub use corruption::{corrupt_program, AppliedCorruption, CorruptionKind, CorruptionSpec};
pub use episode::{
    judge_prompt, render_turn, system_prompt, EpisodeConfig, EpisodeState, Outcome, StepRecord, StepResult, Termination,
    TrajectoryRecord, TurnRecord, TRAJECTORY_SCHEMA_VERSION,
};
pub use policy::{scripted_turns, split_parts, AgentPolicy, PolicyContext, PolicyRegistry, ReplayPolicy, ScriptedPolicy};
pub use replay::{replay, replay_lenient, resolve_final_solid, ReplayOutput, FINAL_MODEL};
pub use store::{load_trajectories, load_trajectory, save_trajectories, save_trajectory};
pub use task::{bundled_task, bundled_tasks, load_task_dir, Task, TASK_SCHEMA_VERSION};

use crate::geometry::KernelError;
use crate::protocol::ToolRegistry;
use crate::reward::{RewardWeights, TrajectoryJudge};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GymError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaVersion { expected: u32, found: u64 },
    #[error("replay failed at step {index}: {detail}")]
    Replay { index: usize, detail: String },
    #[error("episode is already done")]
    EpisodeDone,
    #[error("episode is not done yet")]
    EpisodeNotDone,
    #[error("trajectory store line {line}: {detail}")]
    Store { line: usize, detail: String },
    #[error("{0}")]
    InvalidPolicy(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Runs one episode to termination and scores it.
pub fn run_episode(
    task: Arc<Task>,
    policy: &mut dyn AgentPolicy,
    config: &EpisodeConfig,
    judge: &dyn TrajectoryJudge,
    weights: RewardWeights,
    seed: u64,
) -> Result<TrajectoryRecord, GymError> {
    let mut state = EpisodeState::reset(task, config.clone(), Arc::new(ToolRegistry::standard()));
    while !state.is_done() {
        match policy.next_turn(&state) {
            Some(text) => {
                state.step(&text)?;
            }
            None => state.stop(Termination::PolicyExhausted),
        }
    }
    let mut record = state.finalize(judge, weights)?;
    record.policy = policy.name().to_string();
    record.seed = seed;
    Ok(record)
}
