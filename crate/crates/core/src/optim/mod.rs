//! Policy-optimization math: perplexity, behavioural cloning, group advantages,
//! the clipped GRPO objective and the perplexity curriculum.

mod batch;
mod curriculum;
mod grpo;
mod policy;
mod sim;

pub use batch::{bc_loss, perplexity, TokenBatch};
pub use curriculum::{
    compute_threshold, CurriculumConfig, CurriculumScheduler, CurriculumState, CurriculumStatus, StepOutcome, ValidationSource,
};
pub use grpo::{
    clipped_surrogate, group_advantages, grpo_loss, grpo_loss_grad, kl_per_token, Baseline, GrpoOutput, GrpoParams, TokenDiagnostics,
};
pub use policy::{TabularPolicy, TokenPolicy};
pub use sim::{
    run_simulation, ConstantPpl, GeometricDecay, LevelSummary, LossRecord, SimConfig, SimTrace, SyntheticPolicy, SyntheticRegistry,
    SyntheticSpec, TraceStep,
};

/// A rollout group: one batch and one scalar reward per trajectory.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RolloutGroup {
    pub batches: Vec<TokenBatch>,
    pub rewards: Vec<f64>,
}

impl RolloutGroup {
    pub fn new(batches: Vec<TokenBatch>, rewards: Vec<f64>) -> Result<Self, OptimError> {
        if batches.len() < 2 {
            return Err(OptimError::GroupTooSmall(batches.len()));
        }
        if batches.len() != rewards.len() {
            return Err(OptimError::AdvantageMismatch {
                trajectories: batches.len(),
                advantages: rewards.len(),
            });
        }
        Ok(Self { batches, rewards })
    }

    pub fn loss(&self, baseline: Baseline, params: &GrpoParams) -> Result<GrpoOutput, OptimError> {
        let adv = group_advantages(&self.rewards, baseline)?;
        grpo_loss(&self.batches, &adv, params)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimError {
    #[error("log-probability arrays and mask differ in length")]
    LengthMismatch,
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("log-probability at index {index} is positive")]
    PositiveLogProb { index: usize },
    #[error("action mask selects no tokens")]
    EmptyMask,
    #[error("group needs at least 2 rollouts, got {0}")]
    GroupTooSmall(usize),
    #[error("{trajectories} trajectories but {advantages} advantages")]
    AdvantageMismatch { trajectories: usize, advantages: usize },
    #[error("importance ratio is not finite at trajectory {trajectory}, token {token}")]
    NonFiniteRatio { trajectory: usize, token: usize },
    #[error("clip epsilon must be positive, got {0}")]
    InvalidClip(f64),
    #[error("KL coefficient must be finite and non-negative, got {0}")]
    InvalidBeta(f64),
    #[error("validation perplexity list is empty")]
    EmptyValidation,
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("invalid perplexity {0}")]
    InvalidPerplexity(f64),
    #[error("invalid curriculum configuration: {0}")]
    InvalidCurriculum(String),
    #[error("curriculum is no longer training")]
    CurriculumInactive,
}
