use serde::{Deserialize, Serialize};

use super::cloud::PointCloud;
use super::MetricsError;

pub const JSD_RESOLUTION: usize = 32;
pub const JSD_SMOOTHING: f64 = 1e-12;

/// Probability mass over an `R³` grid, x fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelDistribution {
    resolution: usize,
    probabilities: Vec<f64>,
}

impl VoxelDistribution {
    /// Adds `smoothing` to every cell and normalizes. Fails if the total
    /// mass is zero or the length is not `R³`.
    pub fn from_weights(resolution: usize, weights: &[f64], smoothing: f64) -> Result<Self, MetricsError> {
        if weights.len() != resolution.pow(3) {
            return Err(MetricsError::ResolutionMismatch {
                left: resolution,
                right: (weights.len() as f64).cbrt().round() as usize,
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || !smoothing.is_finite() || smoothing < 0.0 {
            return Err(MetricsError::InvalidDistribution);
        }
        let total: f64 = weights.iter().map(|w| w + smoothing).sum();
        if total <= 0.0 {
            return Err(MetricsError::InvalidDistribution);
        }
        let probabilities = weights.iter().map(|w| (w + smoothing) / total).collect();
        Ok(Self { resolution, probabilities })
    }

    /// Histogram of normalized clouds over `[-0.5, 0.5]³`, pooled across
    /// every cloud given.
    pub fn from_clouds(clouds: &[PointCloud], resolution: usize, smoothing: f64) -> Result<Self, MetricsError> {
        if clouds.is_empty() {
            return Err(MetricsError::EmptySet);
        }
        let r = resolution;
        let mut counts = vec![0.0; r.pow(3)];
        for cloud in clouds {
            let cloud = if cloud.normalized { cloud.clone() } else { cloud.normalize() };
            for p in &cloud.points {
                let idx = p.map(|v| (((v + 0.5) * r as f64).floor() as isize).clamp(0, r as isize - 1) as usize);
                counts[idx[0] + r * (idx[1] + r * idx[2])] += 1.0;
            }
        }
        Self::from_weights(r, &counts, smoothing)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsdReport {
    pub raw: f64,
    pub scaled: f64,
}

fn kl_to_mixture(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (2.0 * a / (a + b)).log2())
        .sum()
}

/// Jensen-Shannon divergence in bits.
pub fn jsd(p: &VoxelDistribution, q: &VoxelDistribution) -> Result<f64, MetricsError> {
    if p.resolution != q.resolution {
        return Err(MetricsError::ResolutionMismatch {
            left: p.resolution,
            right: q.resolution,
        });
    }
    let v = 0.5 * kl_to_mixture(&p.probabilities, &q.probabilities) + 0.5 * kl_to_mixture(&q.probabilities, &p.probabilities);
    Ok(v.clamp(0.0, 1.0))
}

pub fn jsd_report(p: &VoxelDistribution, q: &VoxelDistribution) -> Result<JsdReport, MetricsError> {
    let raw = jsd(p, q)?;
    Ok(JsdReport { raw, scaled: raw * 100.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_to_one() {
        let w: Vec<f64> = (0..27).map(|i| i as f64).collect();
        let d = VoxelDistribution::from_weights(3, &w, JSD_SMOOTHING).unwrap();
        assert!((d.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatch_is_rejected() {
        let a = VoxelDistribution::from_weights(2, &[1.0; 8], 0.0).unwrap();
        let b = VoxelDistribution::from_weights(3, &[1.0; 27], 0.0).unwrap();
        assert!(matches!(jsd(&a, &b), Err(MetricsError::ResolutionMismatch { .. })));
        assert!(VoxelDistribution::from_weights(2, &[0.0; 8], 0.0).is_err());
    }

    #[test]
    fn half_overlap_is_half_bit() {
        let a = VoxelDistribution::from_weights(2, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        let b = VoxelDistribution::from_weights(2, &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        assert!((jsd(&a, &b).unwrap() - 0.5).abs() < 1e-12);
        let r = jsd_report(&a, &b).unwrap();
        assert!((r.scaled - 50.0).abs() < 1e-9);
    }
}
