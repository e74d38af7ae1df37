use indexmap::IndexMap;

use super::corruption::{corrupt_program, AppliedCorruption, CorruptionSpec};
use super::episode::{EpisodeState, TrajectoryRecord};
use super::task::Task;
use super::GymError;
use crate::protocol::tools::SET_COORD_SYSTEM;
use crate::protocol::{AgentTurn, ToolCall, COMPLETED};

/// Produces the next agent message, or `None` when it has nothing left.
pub trait AgentPolicy {
    fn name(&self) -> &str;
    fn next_turn(&mut self, state: &EpisodeState) -> Option<String>;
}

/// Splits a program into parts, each starting at a coordinate-system call.
pub fn split_parts(program: &[ToolCall]) -> Vec<Vec<ToolCall>> {
    let mut parts: Vec<Vec<ToolCall>> = Vec::new();
    for call in program {
        if call.name == SET_COORD_SYSTEM || parts.is_empty() {
            parts.push(Vec::new());
        }
        parts.last_mut().expect("non-empty").push(call.clone());
    }
    parts
}

fn part_plan(k: usize, n: usize, calls: &[ToolCall]) -> String {
    let steps: Vec<&str> = calls.iter().map(|c| c.name.trim_start_matches("freecad-")).collect();
    format!("Part {k} of {n}: {}.", steps.join(", then "))
}

/// Renders a program as canonical turns: one per part, then a completion turn.
pub fn scripted_turns(program: &[ToolCall]) -> Vec<String> {
    let parts = split_parts(program);
    let n = parts.len();
    let mut out: Vec<String> = parts
        .into_iter()
        .enumerate()
        .map(|(i, calls)| {
            AgentTurn {
                think: Some(part_plan(i + 1, n, &calls)),
                tool_calls: calls,
                answer: None,
            }
            .to_text()
        })
        .collect();
    out.push(
        AgentTurn {
            think: Some("All parts are built and assembled into FinalModel.".into()),
            tool_calls: Vec::new(),
            answer: Some(COMPLETED.into()),
        }
        .to_text(),
    );
    out
}

/// Emits the ground-truth program, optionally corrupted, ignoring feedback.
pub struct ScriptedPolicy {
    turns: std::vec::IntoIter<String>,
    applied: Vec<AppliedCorruption>,
}

impl ScriptedPolicy {
    pub fn new(task: &Task, corruption: &CorruptionSpec, seed: u64) -> Self {
        let (program, applied) = corrupt_program(&task.ground_truth_program, corruption, seed);
        Self {
            turns: scripted_turns(&program).into_iter(),
            applied,
        }
    }

    pub fn applied(&self) -> &[AppliedCorruption] {
        &self.applied
    }
}

impl AgentPolicy for ScriptedPolicy {
    fn name(&self) -> &str {
        "scripted"
    }

    fn next_turn(&mut self, _state: &EpisodeState) -> Option<String> {
        self.turns.next()
    }
}

/// Re-sends the agent messages of a recorded trajectory.
pub struct ReplayPolicy {
    turns: std::vec::IntoIter<String>,
}

impl ReplayPolicy {
    pub fn new(record: &TrajectoryRecord) -> Self {
        Self {
            turns: record
                .turns
                .iter()
                .map(|t| t.agent_text.clone())
                .collect::<Vec<_>>()
                .into_iter(),
        }
    }
}

impl AgentPolicy for ReplayPolicy {
    fn name(&self) -> &str {
        "replay"
    }

    fn next_turn(&mut self, _state: &EpisodeState) -> Option<String> {
        self.turns.next()
    }
}

pub struct PolicyContext<'a> {
    pub task: &'a Task,
    pub seed: u64,
    pub corruption: &'a CorruptionSpec,
    pub recorded: Option<&'a TrajectoryRecord>,
}

type Factory = fn(&PolicyContext<'_>) -> Result<Box<dyn AgentPolicy>, GymError>;

pub struct PolicyRegistry {
    factories: IndexMap<&'static str, Factory>,
}

impl PolicyRegistry {
    pub fn standard() -> Self {
        let mut factories: IndexMap<&'static str, Factory> = IndexMap::new();
        factories.insert("scripted", |ctx| Ok(Box::new(ScriptedPolicy::new(ctx.task, ctx.corruption, ctx.seed))));
        factories.insert("replay", |ctx| {
            let rec = ctx
                .recorded
                .ok_or_else(|| GymError::InvalidPolicy("replay policy needs a recorded trajectory".into()))?;
            if rec.task_id != ctx.task.id {
                return Err(GymError::InvalidPolicy(format!(
                    "recorded trajectory is for task {}, not {}",
                    rec.task_id, ctx.task.id
                )));
            }
            Ok(Box::new(ReplayPolicy::new(rec)))
        });
        Self { factories }
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, ctx: &PolicyContext<'_>) -> Result<Box<dyn AgentPolicy>, GymError> {
        let f = self
            .factories
            .get(name)
            .ok_or_else(|| GymError::InvalidPolicy(format!("unknown policy {name}")))?;
        f(ctx)
    }
}
