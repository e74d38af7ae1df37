use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::replay::{replay, resolve_final_solid};
use super::task::Task;
use super::GymError;
use crate::feedback::{invalid_call_observation, Label, Observation};
use crate::geometry::{Document, KernelConfig};
use crate::metrics::{iou, METRIC_RESOLUTION};
use crate::protocol::{check_transcript, parse_agent_output_with, render_tool_response, AgentTurn, ToolCall, ToolRegistry, TranscriptTurn};
use crate::reward::{aggregate_reward, format_reward, orm_reward, step_reward, JudgeInput, JudgeVerdict, RewardBreakdown, RewardWeights, TrajectoryJudge};

pub const TRAJECTORY_SCHEMA_VERSION: u32 = 1;

const SYSTEM_PROMPT: &str = include_str!("../../fixtures/prompts/system.txt");
const ORM_PROMPT: &str = include_str!("../../fixtures/prompts/orm.txt");

/// Agent system prompt with the tool descriptors filled in.
pub fn system_prompt(registry: &ToolRegistry) -> String {
    let tools: Vec<String> = registry
        .descriptors()
        .iter()
        .map(|d| serde_json::to_string(d).expect("descriptor serializes"))
        .collect();
    SYSTEM_PROMPT.replace("{tools}", &tools.join("\n"))
}

/// Trajectory-judge prompt for a learned judge.
pub fn judge_prompt(instruction: &str, history: &str) -> String {
    ORM_PROMPT.replace("{instruction}", instruction).replace("{history}", history)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    pub max_turns: usize,
    pub max_failure_streak: usize,
    pub iou_resolution: usize,
    pub kernel: KernelConfig,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_turns: 40,
            max_failure_streak: 5,
            iou_resolution: METRIC_RESOLUTION,
            kernel: KernelConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    TurnLimit,
    FailureLimit,
    PolicyExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Fail,
}

/// One executed action. `call` is absent when the agent text could not be
/// parsed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub call: Option<ToolCall>,
    pub observation: Observation,
    pub reward: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub agent_text: String,
    pub think: Option<String>,
    pub answer: Option<String>,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub schema_version: u32,
    pub task_id: String,
    pub policy: String,
    pub seed: u64,
    pub turns: Vec<TurnRecord>,
    pub final_answer: bool,
    pub termination: Termination,
    pub final_solid: Option<String>,
    pub final_iou: Option<f64>,
    pub verdict: JudgeVerdict,
    pub reward: RewardBreakdown,
    pub outcome: Outcome,
}

impl TrajectoryRecord {
    pub fn step_rewards(&self) -> Vec<u8> {
        self.turns.iter().flat_map(|t| t.steps.iter().map(|s| s.reward)).collect()
    }

    pub fn tool_calls(&self) -> Vec<&ToolCall> {
        self.turns.iter().flat_map(|t| t.steps.iter().filter_map(|s| s.call.as_ref())).collect()
    }

    /// Recomputes the aggregate from the stored components.
    pub fn recompute_reward(&self) -> RewardBreakdown {
        aggregate_reward(self.reward.orm, &self.step_rewards(), self.reward.format, self.reward.weights)
    }

    /// Interaction transcript rebuilt from the stored turns.
    pub fn transcript(&self) -> String {
        self.turns.iter().map(render_turn).collect()
    }
}

/// Canonical transcript text of one turn: think, the calls, their responses
/// in call order, then the answer. Unparseable agent text is kept verbatim.
pub fn render_turn(turn: &TurnRecord) -> String {
    let calls: Option<Vec<ToolCall>> = turn.steps.iter().map(|st| st.call.clone()).collect();
    let responses = turn.steps.iter().map(|st| st.observation.clone()).collect();
    match calls {
        Some(tool_calls) => TranscriptTurn {
            agent: AgentTurn {
                think: turn.think.clone(),
                tool_calls,
                answer: turn.answer.clone(),
            },
            responses,
        }
        .to_text(),
        None => {
            let mut s = turn.agent_text.clone();
            s.push('\n');
            for r in &responses {
                s.push_str(&render_tool_response(r));
                s.push('\n');
            }
            s
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observations: Vec<Observation>,
    pub step_rewards: Vec<u8>,
    pub done: bool,
}

/// Live state of one episode.
pub struct EpisodeState {
    task: Arc<Task>,
    config: EpisodeConfig,
    registry: Arc<ToolRegistry>,
    document: Document,
    prompt: String,
    transcript: String,
    turns: Vec<TurnRecord>,
    turn: usize,
    failure_streak: usize,
    completed: bool,
    termination: Option<Termination>,
}

impl EpisodeState {
    pub fn reset(task: Arc<Task>, config: EpisodeConfig, registry: Arc<ToolRegistry>) -> Self {
        let prompt = format!("{}\n\n{}", system_prompt(&registry), task.instruction);
        Self {
            document: Document::new(config.kernel.clone()),
            task,
            config,
            registry,
            prompt,
            transcript: String::new(),
            turns: Vec::new(),
            turn: 0,
            failure_streak: 0,
            completed: false,
            termination: None,
        }
    }

    pub fn task(&self) -> &Task {
        &self.task
    }

    pub fn document(&self) -> &Document {
        &self.document
    }

    /// System prompt followed by the task instruction.
    pub fn prompt(&self) -> &str {
        &self.prompt
    }

    /// Agent and environment blocks since reset, excluding the prompt.
    pub fn transcript(&self) -> &str {
        &self.transcript
    }

    pub fn turns(&self) -> &[TurnRecord] {
        &self.turns
    }

    pub fn turn(&self) -> usize {
        self.turn
    }

    pub fn failure_streak(&self) -> usize {
        self.failure_streak
    }

    pub fn is_done(&self) -> bool {
        self.termination.is_some()
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    /// Ends the episode early, e.g. when the policy has nothing more to say.
    pub fn stop(&mut self, reason: Termination) {
        if self.termination.is_none() {
            self.termination = Some(reason);
        }
    }

    fn note(&mut self, label: Label) {
        match label {
            Label::Success => self.failure_streak = 0,
            Label::Fail => self.failure_streak += 1,
        }
    }

    pub fn step(&mut self, agent_text: &str) -> Result<StepResult, GymError> {
        if self.is_done() {
            return Err(GymError::EpisodeDone);
        }
        let names: Vec<&str> = self.registry.names().collect();
        let record = match parse_agent_output_with(agent_text, names.iter().copied()) {
            Ok(parsed) => self.execute(agent_text, parsed),
            Err(e) => {
                let observation = invalid_call_observation(&e.to_string(), &self.document);
                self.note(Label::Fail);
                TurnRecord {
                    agent_text: agent_text.to_string(),
                    think: None,
                    answer: None,
                    steps: vec![StepRecord {
                        call: None,
                        observation,
                        reward: 0,
                    }],
                }
            }
        };
        self.transcript.push_str(&render_turn(&record));
        let result = StepResult {
            observations: record.steps.iter().map(|s| s.observation.clone()).collect(),
            step_rewards: record.steps.iter().map(|s| s.reward).collect(),
            done: false,
        };
        self.turns.push(record);
        self.turn += 1;
        if self.completed {
            self.termination = Some(Termination::Completed);
        } else if self.failure_streak >= self.config.max_failure_streak {
            self.termination = Some(Termination::FailureLimit);
        } else if self.turn >= self.config.max_turns {
            self.termination = Some(Termination::TurnLimit);
        }
        Ok(StepResult {
            done: self.is_done(),
            ..result
        })
    }

    fn execute(&mut self, agent_text: &str, parsed: AgentTurn) -> TurnRecord {
        let mut steps = Vec::with_capacity(parsed.tool_calls.len());
        for call in parsed.tool_calls.iter() {
            let observation = self.registry.execute(&mut self.document, call);
            self.note(observation.label);
            let reward = step_reward(&observation);
            steps.push(StepRecord {
                call: Some(call.clone()),
                observation,
                reward,
            });
        }
        if parsed.is_completed() {
            self.completed = true;
        }
        TurnRecord {
            agent_text: agent_text.to_string(),
            think: parsed.think,
            answer: parsed.answer,
            steps,
        }
    }

    /// Scores the finished episode. The ground truth is replayed through the
    /// same kernel path; the judge sees instruction, transcript and both
    /// solids.
    pub fn finalize(&self, judge: &dyn TrajectoryJudge, weights: RewardWeights) -> Result<TrajectoryRecord, GymError> {
        let termination = self.termination.ok_or(GymError::EpisodeNotDone)?;
        let gt = replay(&self.task.ground_truth_program, &self.config.kernel)?;
        let final_solid = resolve_final_solid(&self.document);
        let verdict = judge.judge(&JudgeInput {
            instruction: &self.task.instruction,
            transcript: &self.transcript,
            final_solid: final_solid.as_ref().map(|(_, s)| s.as_ref()),
            ground_truth: Some(&gt.final_solid),
        });
        let final_iou = match &final_solid {
            Some((_, s)) => Some(iou(s, &gt.final_solid, self.config.iou_resolution)?),
            None => None,
        };
        let step_rewards: Vec<u8> = self.turns.iter().flat_map(|t| t.steps.iter().map(|s| s.reward)).collect();
        let reward = aggregate_reward(
            orm_reward(&verdict),
            &step_rewards,
            format_reward(&check_transcript(&self.transcript)),
            weights,
        );
        let outcome = if self.completed && reward.orm == 1 {
            Outcome::Success
        } else {
            Outcome::Fail
        };
        Ok(TrajectoryRecord {
            schema_version: TRAJECTORY_SCHEMA_VERSION,
            task_id: self.task.id.clone(),
            policy: String::new(),
            seed: 0,
            turns: self.turns.clone(),
            final_answer: self.completed,
            termination,
            final_solid: final_solid.map(|(n, _)| n),
            final_iou,
            verdict,
            reward,
            outcome,
        })
    }
}
