//! Run configuration loaded from TOML. Unknown keys are rejected and the
//! `[seeds]` table is mandatory.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::geometry::KernelConfig;
use crate::gym::EpisodeConfig;
use crate::metrics::{DEFAULT_POINTS, JSD_RESOLUTION, METRIC_RESOLUTION};
use crate::optim::{Baseline, CurriculumConfig, GrpoParams};
use crate::reward::RewardWeights;

pub const TASKS_DIR_ENV: &str = "CADGYM_TASKS_DIR";
pub const OUTPUT_DIR_ENV: &str = "CADGYM_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub rollout: u64,
    pub sampling: u64,
    pub simulation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrpoSection {
    pub group_size: usize,
    pub clip_eps: f64,
    pub kl_beta: f64,
    pub baseline: Baseline,
    pub learning_rate: f64,
}

impl Default for GrpoSection {
    fn default() -> Self {
        let p = GrpoParams::default();
        Self {
            group_size: 8,
            clip_eps: p.clip_eps,
            kl_beta: p.kl_beta,
            baseline: Baseline::Mean,
            learning_rate: 0.5,
        }
    }
}

impl GrpoSection {
    pub fn params(&self) -> GrpoParams {
        GrpoParams {
            clip_eps: self.clip_eps,
            kl_beta: self.kl_beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeSection {
    pub max_turns: usize,
    pub max_failure_streak: usize,
}

impl Default for EpisodeSection {
    fn default() -> Self {
        let e = EpisodeConfig::default();
        Self {
            max_turns: e.max_turns,
            max_failure_streak: e.max_failure_streak,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    pub points: usize,
    pub resolution: usize,
    pub jsd_resolution: usize,
    pub judge_threshold: f64,
    /// Multiplier applied to reported CD and MMD values.
    pub distance_scale: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            points: DEFAULT_POINTS,
            resolution: METRIC_RESOLUTION,
            jsd_resolution: JSD_RESOLUTION,
            judge_threshold: 0.95,
            distance_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    pub tasks_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seeds: Seeds,
    #[serde(default)]
    pub reward: RewardWeights,
    #[serde(default)]
    pub grpo: GrpoSection,
    #[serde(default)]
    pub curriculum: CurriculumConfig,
    #[serde(default)]
    pub geometry: KernelConfig,
    #[serde(default)]
    pub episode: EpisodeSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub paths: PathsSection,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config value out of range: {0}")]
    Range(String),
}

fn range(cond: bool, msg: &str) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::Range(msg.to_string()))
    }
}

impl Config {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seeds: Seeds {
                rollout: seed,
                sampling: seed,
                simulation: seed,
            },
            reward: RewardWeights::default(),
            grpo: GrpoSection::default(),
            curriculum: CurriculumConfig::default(),
            geometry: KernelConfig::default(),
            episode: EpisodeSection::default(),
            metrics: MetricsSection::default(),
            paths: PathsSection::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let c: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.reward.validate().map_err(ConfigError::Range)?;
        let g = &self.grpo;
        range(g.group_size >= 2, "grpo.group_size must be at least 2")?;
        range(g.clip_eps > 0.0 && g.clip_eps < 1.0, "grpo.clip_eps must lie in (0, 1)")?;
        range(g.kl_beta >= 0.0 && g.kl_beta.is_finite(), "grpo.kl_beta must be finite and >= 0")?;
        range(g.learning_rate > 0.0 && g.learning_rate.is_finite(), "grpo.learning_rate must be positive")?;
        self.curriculum.validate().map_err(|e| ConfigError::Range(format!("curriculum: {e}")))?;
        self.geometry.validate().map_err(|e| ConfigError::Range(format!("geometry: {e}")))?;
        range(self.episode.max_turns >= 1, "episode.max_turns must be at least 1")?;
        range(self.episode.max_failure_streak >= 1, "episode.max_failure_streak must be at least 1")?;
        let m = &self.metrics;
        range(m.points >= 1, "metrics.points must be at least 1")?;
        range(
            m.resolution >= crate::geometry::MIN_RESOLUTION && m.resolution <= 512,
            "metrics.resolution must lie in [5, 512]",
        )?;
        range(
            m.jsd_resolution >= 1 && m.jsd_resolution <= 256,
            "metrics.jsd_resolution must lie in [1, 256]",
        )?;
        range(
            m.judge_threshold > 0.0 && m.judge_threshold <= 1.0,
            "metrics.judge_threshold must lie in (0, 1]",
        )?;
        range(m.distance_scale > 0.0 && m.distance_scale.is_finite(), "metrics.distance_scale must be positive")?;
        Ok(())
    }

    /// Replaces path settings from the environment when the variables are set.
    pub fn apply_env_overrides(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(v) = get(TASKS_DIR_ENV).filter(|v| !v.is_empty()) {
            self.paths.tasks_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = get(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
            self.paths.output_dir = Some(PathBuf::from(v));
        }
    }

    pub fn episode_config(&self) -> EpisodeConfig {
        EpisodeConfig {
            max_turns: self.episode.max_turns,
            max_failure_streak: self.episode.max_failure_streak,
            iou_resolution: self.metrics.resolution,
            kernel: self.geometry.clone(),
        }
    }
}
