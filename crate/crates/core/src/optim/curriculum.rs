use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::OptimError;

/// `delta = alpha * mean(validation_ppls)`.
pub fn compute_threshold(validation_ppls: &[f64], alpha: f64) -> Result<f64, OptimError> {
    if validation_ppls.is_empty() {
        return Err(OptimError::EmptyValidation);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(OptimError::InvalidAlpha(alpha));
    }
    if let Some(&p) = validation_ppls.iter().find(|p| !p.is_finite() || **p < 1.0) {
        return Err(OptimError::InvalidPerplexity(p));
    }
    Ok(alpha * validation_ppls.iter().sum::<f64>() / validation_ppls.len() as f64)
}

/// Held-in validation perplexities of the current policy at a level.
pub trait ValidationSource {
    fn validation_ppls(&mut self, level: usize) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurriculumConfig {
    pub levels: usize,
    pub alpha: f64,
    pub window: usize,
    pub n_update: usize,
    pub max_iter_per_level: usize,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            levels: 5,
            alpha: 0.7,
            window: 16,
            n_update: 32,
            max_iter_per_level: 10_000,
        }
    }
}

impl CurriculumConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(OptimError::InvalidAlpha(self.alpha));
        }
        if self.levels == 0 || self.window == 0 || self.n_update == 0 || self.max_iter_per_level == 0 {
            return Err(OptimError::InvalidCurriculum(
                "levels, window, n_update and max_iter_per_level must all be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurriculumStatus {
    Training,
    Finished,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub level: usize,
    pub recent_ppls: VecDeque<f64>,
    pub threshold: f64,
    pub update_counter: usize,
    pub buffer_size: usize,
    pub steps_at_level: usize,
    pub total_steps: usize,
    pub status: CurriculumStatus,
}

impl CurriculumState {
    pub fn window_mean(&self) -> Option<f64> {
        if self.recent_ppls.is_empty() {
            None
        } else {
            Some(self.recent_ppls.iter().sum::<f64>() / self.recent_ppls.len() as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub level: usize,
    pub window_mean: f64,
    pub threshold: f64,
    pub advanced: bool,
    pub policy_update: bool,
    pub status: CurriculumStatus,
}

/// Perplexity-gated level advancement with a bounded window and periodic
/// policy-update signalling.
pub struct CurriculumScheduler {
    config: CurriculumConfig,
    state: CurriculumState,
}

impl CurriculumScheduler {
    pub fn new(config: CurriculumConfig, source: &mut dyn ValidationSource) -> Result<Self, OptimError> {
        config.validate()?;
        let threshold = compute_threshold(&source.validation_ppls(1), config.alpha)?;
        Ok(Self {
            config,
            state: CurriculumState {
                level: 1,
                recent_ppls: VecDeque::with_capacity(config.window),
                threshold,
                update_counter: 0,
                buffer_size: 0,
                steps_at_level: 0,
                total_steps: 0,
                status: CurriculumStatus::Training,
            },
        })
    }

    pub fn state(&self) -> &CurriculumState {
        &self.state
    }

    pub fn config(&self) -> &CurriculumConfig {
        &self.config
    }

    /// Records the perplexity of one freshly collected trajectory.
    pub fn step(&mut self, new_ppl: f64, source: &mut dyn ValidationSource) -> Result<StepOutcome, OptimError> {
        if self.state.status != CurriculumStatus::Training {
            return Err(OptimError::CurriculumInactive);
        }
        if !(new_ppl.is_finite() && new_ppl > 0.0) {
            return Err(OptimError::InvalidPerplexity(new_ppl));
        }
        let s = &mut self.state;
        if s.recent_ppls.len() == self.config.window {
            s.recent_ppls.pop_front();
        }
        s.recent_ppls.push_back(new_ppl);
        s.steps_at_level += 1;
        s.total_steps += 1;
        s.buffer_size += 1;
        let policy_update = s.buffer_size >= self.config.n_update;
        if policy_update {
            s.update_counter += 1;
            s.buffer_size = 0;
        }
        let window_mean = s.window_mean().unwrap_or(f64::INFINITY);
        let level = s.level;
        let threshold = s.threshold;
        let mut advanced = false;
        if window_mean < threshold {
            advanced = true;
            if s.level == self.config.levels {
                s.status = CurriculumStatus::Finished;
            } else {
                let next = s.level + 1;
                let delta = compute_threshold(&source.validation_ppls(next), self.config.alpha)?;
                let s = &mut self.state;
                s.level = next;
                s.threshold = delta;
                s.recent_ppls.clear();
                s.steps_at_level = 0;
            }
        } else if s.steps_at_level >= self.config.max_iter_per_level {
            s.status = CurriculumStatus::Stalled;
        }
        Ok(StepOutcome {
            level,
            window_mean,
            threshold,
            advanced,
            policy_update,
            status: self.state.status,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(f64);
    impl ValidationSource for Fixed {
        fn validation_ppls(&mut self, _level: usize) -> Vec<f64> {
            vec![self.0]
        }
    }

    #[test]
    fn threshold_examples() {
        assert!((compute_threshold(&[5.0, 15.0], 0.7).unwrap() - 7.0).abs() < 1e-12);
        assert!((compute_threshold(&[10.0], 0.9).unwrap() - 9.0).abs() < 1e-12);
        assert_eq!(compute_threshold(&[4.0], 0.5).unwrap(), 2.0);
        assert!(matches!(compute_threshold(&[], 0.5), Err(OptimError::EmptyValidation)));
        assert!(compute_threshold(&[0.5], 0.5).is_err());
        assert!(compute_threshold(&[2.0], 1.0).is_err());
    }

    #[test]
    fn above_threshold_keeps_level_and_below_advances() {
        let mut src = Fixed(10.0);
        let cfg = CurriculumConfig { levels: 3, ..Default::default() };
        let mut s = CurriculumScheduler::new(cfg, &mut src).unwrap();
        let o = s.step(8.0, &mut src).unwrap();
        assert!(!o.advanced);
        assert_eq!(s.state().level, 1);
        let o = s.step(1.0, &mut src).unwrap();
        assert!(o.advanced);
        assert_eq!(s.state().level, 2);
        assert!(s.state().recent_ppls.is_empty());
    }

    #[test]
    fn stalls_at_safeguard() {
        let mut src = Fixed(10.0);
        let cfg = CurriculumConfig { max_iter_per_level: 5, ..Default::default() };
        let mut s = CurriculumScheduler::new(cfg, &mut src).unwrap();
        for _ in 0..4 {
            assert_eq!(s.step(10.0, &mut src).unwrap().status, CurriculumStatus::Training);
        }
        assert_eq!(s.step(10.0, &mut src).unwrap().status, CurriculumStatus::Stalled);
        assert!(matches!(s.step(1.0, &mut src), Err(OptimError::CurriculumInactive)));
    }

    #[test]
    fn update_signal_every_n() {
        let mut src = Fixed(10.0);
        let cfg = CurriculumConfig { n_update: 3, ..Default::default() };
        let mut s = CurriculumScheduler::new(cfg, &mut src).unwrap();
        let flags: Vec<bool> = (0..7).map(|_| s.step(9.5, &mut src).unwrap().policy_update).collect();
        assert_eq!(flags, vec![false, false, true, false, false, true, false]);
        assert_eq!(s.state().update_counter, 2);
        assert_eq!(s.state().buffer_size, 1);
    }
}
