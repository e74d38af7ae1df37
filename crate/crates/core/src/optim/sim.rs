//! Synthetic curriculum training: a perplexity model drives the scheduler
//! while a tabular policy receives GRPO updates whenever one is signalled.

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::batch::{bc_loss, TokenBatch};
use super::curriculum::{CurriculumConfig, CurriculumScheduler, CurriculumStatus, ValidationSource};
use super::grpo::{group_advantages, grpo_loss, grpo_loss_grad, Baseline, GrpoParams};
use super::policy::{TabularPolicy, TokenPolicy};
use super::OptimError;

/// Perplexity behaviour of a simulated policy. `step` counts trajectories
/// collected since the current level began.
pub trait SyntheticPolicy: Send + Sync {
    fn name(&self) -> &str;
    fn training_ppl(&self, level: usize, step: usize) -> f64;
    fn validation_ppls(&self, level: usize) -> Vec<f64>;
}

/// `ppl = c * r^step`, restarting at `c` on every level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricDecay {
    pub initial: f64,
    pub rate: f64,
}

impl SyntheticPolicy for GeometricDecay {
    fn name(&self) -> &str {
        "geometric-decay"
    }

    fn training_ppl(&self, _level: usize, step: usize) -> f64 {
        self.initial * self.rate.powi(step as i32)
    }

    fn validation_ppls(&self, _level: usize) -> Vec<f64> {
        vec![self.initial]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPpl {
    pub value: f64,
}

impl SyntheticPolicy for ConstantPpl {
    fn name(&self) -> &str {
        "constant"
    }

    fn training_ppl(&self, _level: usize, _step: usize) -> f64 {
        self.value
    }

    fn validation_ppls(&self, _level: usize) -> Vec<f64> {
        vec![self.value]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub initial: f64,
    pub rate: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { initial: 10.0, rate: 0.9 }
    }
}

type Factory = fn(&SyntheticSpec) -> Box<dyn SyntheticPolicy>;

pub struct SyntheticRegistry {
    factories: IndexMap<&'static str, Factory>,
}

impl SyntheticRegistry {
    pub fn standard() -> Self {
        let mut factories: IndexMap<&'static str, Factory> = IndexMap::new();
        factories.insert("geometric-decay", |s| {
            Box::new(GeometricDecay {
                initial: s.initial,
                rate: s.rate,
            })
        });
        factories.insert("constant", |s| Box::new(ConstantPpl { value: s.initial }));
        Self { factories }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, spec: &SyntheticSpec) -> Option<Box<dyn SyntheticPolicy>> {
        self.factories.get(name).map(|f| f(spec))
    }
}

struct Validation<'a>(&'a dyn SyntheticPolicy);

impl ValidationSource for Validation<'_> {
    fn validation_ppls(&mut self, level: usize) -> Vec<f64> {
        self.0.validation_ppls(level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub curriculum: CurriculumConfig,
    pub grpo: GrpoParams,
    pub baseline: Baseline,
    pub group_size: usize,
    pub vocab: usize,
    pub sequence_len: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            curriculum: CurriculumConfig::default(),
            grpo: GrpoParams::default(),
            baseline: Baseline::Mean,
            group_size: 8,
            vocab: 4,
            sequence_len: 12,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub level: usize,
    pub ppl: f64,
    pub window_mean: f64,
    pub threshold: f64,
    pub advanced: bool,
    pub policy_update: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub threshold: f64,
    pub steps: usize,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    pub level: usize,
    pub grpo_loss: f64,
    pub bc_loss: f64,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub policy: String,
    pub status: CurriculumStatus,
    pub final_level: usize,
    pub total_steps: usize,
    pub levels: Vec<LevelSummary>,
    pub losses: Vec<LossRecord>,
    pub steps: Vec<TraceStep>,
}

/// One GRPO update of the tabular policy on a freshly sampled group.
/// Reward is the fraction of sampled tokens equal to token 0.
fn policy_update(
    policy: &mut TabularPolicy,
    reference: &TabularPolicy,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64, f64), OptimError> {
    let seqs: Vec<Vec<usize>> = (0..cfg.group_size).map(|_| policy.sample(rng, cfg.sequence_len)).collect();
    let rewards: Vec<f64> = seqs
        .iter()
        .map(|s| s.iter().filter(|t| **t == 0).count() as f64 / s.len() as f64)
        .collect();
    let adv = group_advantages(&rewards, cfg.baseline)?;
    let batches = seqs
        .iter()
        .map(|s| {
            let lp = policy.logprobs(s);
            TokenBatch::new(lp.clone(), lp, reference.logprobs(s), vec![true; s.len()])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let out = grpo_loss(&batches, &adv, &cfg.grpo)?;
    let grads = grpo_loss_grad(&batches, &adv, &cfg.grpo)?;
    let bc = batches.iter().map(bc_loss).sum::<Result<f64, _>>()? / batches.len() as f64;
    policy.apply_logprob_grad(&seqs, &grads, cfg.learning_rate);
    let mean_reward = rewards.iter().sum::<f64>() / rewards.len() as f64;
    Ok((out.loss, bc, mean_reward))
}

pub fn run_simulation(synthetic: &dyn SyntheticPolicy, cfg: &SimConfig) -> Result<SimTrace, OptimError> {
    if cfg.group_size < 2 {
        return Err(OptimError::GroupTooSmall(cfg.group_size));
    }
    if cfg.vocab == 0 || cfg.sequence_len == 0 {
        return Err(OptimError::InvalidCurriculum("vocab and sequence_len must be at least 1".into()));
    }
    let mut source = Validation(synthetic);
    let mut sched = CurriculumScheduler::new(cfg.curriculum, &mut source)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let reference = TabularPolicy::uniform(cfg.vocab);
    let mut policy = reference.clone();
    let mut steps = Vec::new();
    let mut losses = Vec::new();
    let mut levels = vec![LevelSummary {
        level: 1,
        threshold: sched.state().threshold,
        steps: 0,
        completed: false,
    }];
    while sched.state().status == CurriculumStatus::Training {
        let st = sched.state();
        let ppl = synthetic.training_ppl(st.level, st.steps_at_level);
        let step_index = st.total_steps;
        let o = sched.step(ppl, &mut source)?;
        let cur = levels.last_mut().expect("at least one level");
        cur.steps += 1;
        if o.advanced {
            cur.completed = true;
        }
        if o.policy_update {
            let (g, b, r) = policy_update(&mut policy, &reference, cfg, &mut rng)?;
            losses.push(LossRecord {
                step: step_index,
                level: o.level,
                grpo_loss: g,
                bc_loss: b,
                mean_reward: r,
            });
        }
        steps.push(TraceStep {
            step: step_index,
            level: o.level,
            ppl,
            window_mean: o.window_mean,
            threshold: o.threshold,
            advanced: o.advanced,
            policy_update: o.policy_update,
        });
        if o.advanced && o.status == CurriculumStatus::Training {
            levels.push(LevelSummary {
                level: sched.state().level,
                threshold: sched.state().threshold,
                steps: 0,
                completed: false,
            });
        }
    }
    let st = sched.state();
    Ok(SimTrace {
        policy: synthetic.name().to_string(),
        status: st.status,
        final_level: st.level,
        total_steps: st.total_steps,
        levels,
        losses,
        steps,
    })
}
