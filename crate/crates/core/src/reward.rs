//! Step, format and outcome rewards and their weighted aggregate.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::feedback::{Label, Observation};
use crate::geometry::CsgSolid;
use crate::metrics::{iou, METRIC_RESOLUTION};
use crate::protocol::FormatVerdict;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.5,
            gamma: 0.5,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), String> {
        let w = [self.alpha, self.beta, self.gamma];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err("reward weights must be finite and non-negative".into());
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err("at least one reward weight must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub orm: u8,
    pub step_rewards: Vec<u8>,
    pub step_mean: f64,
    pub format: u8,
    pub total: f64,
    pub weights: RewardWeights,
}

pub fn step_reward(obs: &Observation) -> u8 {
    (obs.label == Label::Success) as u8
}

pub fn format_reward(verdict: &FormatVerdict) -> u8 {
    verdict.ok as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub yes_prob: f64,
    pub no_prob: f64,
}

impl JudgeVerdict {
    pub const YES: JudgeVerdict = JudgeVerdict { yes_prob: 1.0, no_prob: 0.0 };
    pub const NO: JudgeVerdict = JudgeVerdict { yes_prob: 0.0, no_prob: 1.0 };

    pub fn is_yes(&self) -> bool {
        self.yes_prob > self.no_prob
    }
}

/// Strictly greater YES mass wins; a tie scores 0.
pub fn orm_reward(verdict: &JudgeVerdict) -> u8 {
    verdict.is_yes() as u8
}

pub fn aggregate_reward(orm: u8, step_rewards: &[u8], format: u8, weights: RewardWeights) -> RewardBreakdown {
    let step_mean = if step_rewards.is_empty() {
        0.0
    } else {
        step_rewards.iter().map(|&r| r as f64).sum::<f64>() / step_rewards.len() as f64
    };
    let total = weights.alpha * orm as f64 + weights.beta * step_mean + weights.gamma * format as f64;
    RewardBreakdown {
        orm,
        step_rewards: step_rewards.to_vec(),
        step_mean,
        format,
        total,
        weights,
    }
}

/// Everything a trajectory-level judge may look at.
pub struct JudgeInput<'a> {
    pub instruction: &'a str,
    pub transcript: &'a str,
    pub final_solid: Option<&'a CsgSolid>,
    pub ground_truth: Option<&'a CsgSolid>,
}

pub trait TrajectoryJudge: Send + Sync {
    fn name(&self) -> &str;
    fn judge(&self, input: &JudgeInput<'_>) -> JudgeVerdict;
}

/// Answers YES when the final solid's IoU against the ground truth reaches
/// the threshold. Missing or degenerate solids are NO.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceJudge {
    pub threshold: f64,
    pub resolution: usize,
}

impl Default for ReferenceJudge {
    fn default() -> Self {
        Self {
            threshold: 0.95,
            resolution: METRIC_RESOLUTION,
        }
    }
}

impl ReferenceJudge {
    pub fn verdict(&self, final_solid: &CsgSolid, gt: &CsgSolid) -> JudgeVerdict {
        if final_solid.bounding_box().is_none() || gt.bounding_box().is_none() {
            return JudgeVerdict::NO;
        }
        match iou(final_solid, gt, self.resolution) {
            Ok(v) if v > 0.0 && v >= self.threshold => JudgeVerdict::YES,
            _ => JudgeVerdict::NO,
        }
    }
}

impl TrajectoryJudge for ReferenceJudge {
    fn name(&self) -> &str {
        "reference"
    }

    fn judge(&self, input: &JudgeInput<'_>) -> JudgeVerdict {
        match (input.final_solid, input.ground_truth) {
            (Some(f), Some(g)) => self.verdict(f, g),
            _ => JudgeVerdict::NO,
        }
    }
}

pub struct JudgeRegistry {
    judges: IndexMap<String, Box<dyn TrajectoryJudge>>,
}

impl JudgeRegistry {
    pub fn empty() -> Self {
        Self { judges: IndexMap::new() }
    }

    pub fn standard(threshold: f64, resolution: usize) -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ReferenceJudge { threshold, resolution }));
        r
    }

    pub fn register(&mut self, judge: Box<dyn TrajectoryJudge>) {
        self.judges.insert(judge.name().to_string(), judge);
    }

    pub fn get(&self, name: &str) -> Option<&dyn TrajectoryJudge> {
        self.judges.get(name).map(|j| j.as_ref())
    }

    pub fn names(&self) -> Vec<&str> {
        self.judges.keys().map(String::as_str).collect()
    }
}
