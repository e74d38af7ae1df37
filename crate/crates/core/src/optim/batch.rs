use serde::{Deserialize, Serialize};

use super::OptimError;

/// Aligned per-token log-probabilities under the current, behaviour and
/// reference policies. `action_mask` marks agent-generated tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenBatch {
    pub logp_new: Vec<f64>,
    pub logp_old: Vec<f64>,
    pub logp_ref: Vec<f64>,
    pub action_mask: Vec<bool>,
}

impl TokenBatch {
    pub fn new(logp_new: Vec<f64>, logp_old: Vec<f64>, logp_ref: Vec<f64>, action_mask: Vec<bool>) -> Result<Self, OptimError> {
        let b = Self {
            logp_new,
            logp_old,
            logp_ref,
            action_mask,
        };
        b.validate()?;
        Ok(b)
    }

    /// Batch where all three policies agree and every token is an action.
    pub fn on_policy(logp: Vec<f64>) -> Result<Self, OptimError> {
        let n = logp.len();
        Self::new(logp.clone(), logp.clone(), logp, vec![true; n])
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        let n = self.logp_new.len();
        if self.logp_old.len() != n || self.logp_ref.len() != n || self.action_mask.len() != n {
            return Err(OptimError::LengthMismatch);
        }
        for arr in [&self.logp_new, &self.logp_old, &self.logp_ref] {
            for (i, &v) in arr.iter().enumerate() {
                if !v.is_finite() {
                    return Err(OptimError::NonFinite { index: i });
                }
                if v > 0.0 {
                    return Err(OptimError::PositiveLogProb { index: i });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.logp_new.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logp_new.is_empty()
    }

    pub fn masked_count(&self) -> usize {
        self.action_mask.iter().filter(|m| **m).count()
    }

    fn masked_mean_new(&self) -> Result<f64, OptimError> {
        let t = self.masked_count();
        if t == 0 {
            return Err(OptimError::EmptyMask);
        }
        let s: f64 = self
            .logp_new
            .iter()
            .zip(&self.action_mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| v)
            .sum();
        Ok(s / t as f64)
    }
}

/// `exp(-mean masked logp_new)`.
pub fn perplexity(batch: &TokenBatch) -> Result<f64, OptimError> {
    Ok((-batch.masked_mean_new()?).exp())
}

/// Negative mean masked log-likelihood.
pub fn bc_loss(batch: &TokenBatch) -> Result<f64, OptimError> {
    Ok(-batch.masked_mean_new()?)
}
