use serde::{Deserialize, Serialize};

use super::batch::TokenBatch;
use super::OptimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    #[default]
    Mean,
    Max,
}

/// `(R_i - baseline) / std`, population std. Groups whose std is negligible
/// relative to their mean get all-zero advantages.
pub fn group_advantages(rewards: &[f64], baseline: Baseline) -> Result<Vec<f64>, OptimError> {
    let g = rewards.len();
    if g < 2 {
        return Err(OptimError::GroupTooSmall(g));
    }
    if let Some(i) = rewards.iter().position(|r| !r.is_finite()) {
        return Err(OptimError::NonFinite { index: i });
    }
    let mean = rewards.iter().sum::<f64>() / g as f64;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / g as f64;
    let std = var.sqrt();
    if std < 1e-12 * mean.abs().max(1.0) {
        return Ok(vec![0.0; g]);
    }
    let b = match baseline {
        Baseline::Mean => mean,
        Baseline::Max => rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(rewards.iter().map(|r| (r - b) / std).collect())
}

/// `k = rho - ln rho - 1`, `rho = exp(logp_ref - logp_new)`.
pub fn kl_per_token(logp_new: f64, logp_ref: f64) -> f64 {
    let d = logp_ref - logp_new;
    (d.exp() - d - 1.0).max(0.0)
}

pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    (ratio * advantage).min(clipped * advantage)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrpoParams {
    pub clip_eps: f64,
    pub kl_beta: f64,
}

impl Default for GrpoParams {
    fn default() -> Self {
        Self {
            clip_eps: 0.2,
            kl_beta: 0.01,
        }
    }
}

impl GrpoParams {
    pub fn validate(&self) -> Result<(), OptimError> {
        if self.clip_eps.is_nan() || self.clip_eps <= 0.0 {
            return Err(OptimError::InvalidClip(self.clip_eps));
        }
        if !self.kl_beta.is_finite() || self.kl_beta < 0.0 {
            return Err(OptimError::InvalidBeta(self.kl_beta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenDiagnostics {
    pub ratio: f64,
    pub clipped: bool,
    pub kl: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrpoOutput {
    /// Negated objective, for minimization.
    pub loss: f64,
    pub mean_kl: f64,
    pub clip_fraction: f64,
    /// Per trajectory, one entry per masked token.
    pub tokens: Vec<Vec<TokenDiagnostics>>,
}

fn check_inputs(batches: &[TokenBatch], advantages: &[f64], params: &GrpoParams) -> Result<(), OptimError> {
    params.validate()?;
    if batches.len() != advantages.len() || batches.is_empty() {
        return Err(OptimError::AdvantageMismatch {
            trajectories: batches.len(),
            advantages: advantages.len(),
        });
    }
    for b in batches {
        b.validate()?;
        if b.masked_count() == 0 {
            return Err(OptimError::EmptyMask);
        }
    }
    Ok(())
}

fn ratio_at(b: &TokenBatch, i: usize, k: usize) -> Result<f64, OptimError> {
    let r = (b.logp_new[k] - b.logp_old[k]).exp();
    if !r.is_finite() {
        return Err(OptimError::NonFiniteRatio { trajectory: i, token: k });
    }
    Ok(r)
}

/// Clipped surrogate with per-token KL penalty, averaged over masked tokens
/// within each trajectory and then over trajectories, negated.
pub fn grpo_loss(batches: &[TokenBatch], advantages: &[f64], params: &GrpoParams) -> Result<GrpoOutput, OptimError> {
    check_inputs(batches, advantages, params)?;
    let eps = params.clip_eps;
    let mut objective = 0.0;
    let mut kl_sum = 0.0;
    let mut clipped_count = 0usize;
    let mut token_count = 0usize;
    let mut tokens = Vec::with_capacity(batches.len());
    for (i, (b, &a)) in batches.iter().zip(advantages).enumerate() {
        let mut diag = Vec::with_capacity(b.masked_count());
        let mut traj = 0.0;
        for k in (0..b.len()).filter(|&k| b.action_mask[k]) {
            let r = ratio_at(b, i, k)?;
            let kl = kl_per_token(b.logp_new[k], b.logp_ref[k]);
            let surr = clipped_surrogate(r, a, eps);
            let clipped = (r * a) > r.clamp(1.0 - eps, 1.0 + eps) * a;
            let term = surr - params.kl_beta * kl;
            traj += term;
            kl_sum += kl;
            clipped_count += clipped as usize;
            token_count += 1;
            diag.push(TokenDiagnostics {
                ratio: r,
                clipped,
                kl,
                objective: term,
            });
        }
        objective += traj / diag.len() as f64;
        tokens.push(diag);
    }
    objective /= batches.len() as f64;
    Ok(GrpoOutput {
        loss: -objective,
        mean_kl: kl_sum / token_count as f64,
        clip_fraction: clipped_count as f64 / token_count as f64,
        tokens,
    })
}

/// Gradient of `grpo_loss` with respect to every `logp_new` entry
/// (zero on unmasked tokens).
pub fn grpo_loss_grad(batches: &[TokenBatch], advantages: &[f64], params: &GrpoParams) -> Result<Vec<Vec<f64>>, OptimError> {
    check_inputs(batches, advantages, params)?;
    let eps = params.clip_eps;
    let m = batches.len() as f64;
    let mut out = Vec::with_capacity(batches.len());
    for (i, (b, &a)) in batches.iter().zip(advantages).enumerate() {
        let t = b.masked_count() as f64;
        let mut g = vec![0.0; b.len()];
        for k in (0..b.len()).filter(|&k| b.action_mask[k]) {
            let r = ratio_at(b, i, k)?;
            let clip = r.clamp(1.0 - eps, 1.0 + eps);
            let inside = r > 1.0 - eps && r < 1.0 + eps;
            let d_surr = if r * a <= clip * a || inside { r * a } else { 0.0 };
            let rho = (b.logp_ref[k] - b.logp_new[k]).exp();
            let d_kl = 1.0 - rho;
            g[k] = -(d_surr - params.kl_beta * d_kl) / (t * m);
        }
        out.push(g);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advantage_examples() {
        assert_eq!(group_advantages(&[0.0, 1.0, 1.0, 0.0], Baseline::Mean).unwrap(), vec![-1.0, 1.0, 1.0, -1.0]);
        assert_eq!(group_advantages(&[0.0, 1.0, 1.0, 0.0], Baseline::Max).unwrap(), vec![-2.0, 0.0, 0.0, -2.0]);
        assert_eq!(group_advantages(&[3.0; 4], Baseline::Mean).unwrap(), vec![0.0; 4]);
        assert!(matches!(group_advantages(&[1.0], Baseline::Mean), Err(OptimError::GroupTooSmall(1))));
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_per_token(-1.3, -1.3), 0.0);
        let v = kl_per_token(-2f64.ln(), 0.0);
        assert!((v - (1.0 - 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn clip_examples() {
        assert!((clipped_surrogate(1.5, 1.0, 0.2) - 1.2).abs() < 1e-15);
        assert!((clipped_surrogate(0.5, -1.0, 0.2) + 0.8).abs() < 1e-15);
    }

    #[test]
    fn unit_ratio_objective_is_mean_advantage() {
        let b = TokenBatch::on_policy(vec![-0.3, -1.2, -0.7]).unwrap();
        let adv = [1.5, -0.5];
        let out = grpo_loss(&[b.clone(), b], &adv, &GrpoParams { clip_eps: 0.2, kl_beta: 0.0 }).unwrap();
        assert!((out.loss + 0.5).abs() < 1e-15);
        assert_eq!(out.clip_fraction, 0.0);
    }

    #[test]
    fn non_finite_ratio_reports_index() {
        let b = TokenBatch {
            logp_new: vec![-0.1, -0.0],
            logp_old: vec![-0.1, -800.0],
            logp_ref: vec![-0.1, -0.0],
            action_mask: vec![true, true],
        };
        let err = grpo_loss(&[b.clone(), b], &[1.0, -1.0], &GrpoParams::default()).unwrap_err();
        assert_eq!(err, OptimError::NonFiniteRatio { trajectory: 0, token: 1 });
    }
}
