use rayon::prelude::*;

use super::chamfer::chamfer;
use super::cloud::PointCloud;
use super::MetricsError;

/// Index and chamfer distance of the closest reference for each generated
/// cloud. Ties go to the lowest reference index.
pub fn nearest_references(generated: &[PointCloud], reference: &[PointCloud]) -> Result<Vec<(usize, f64)>, MetricsError> {
    if generated.is_empty() || reference.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    Ok(generated
        .par_iter()
        .map(|g| {
            reference
                .iter()
                .map(|r| chamfer(g, r))
                .enumerate()
                .fold((usize::MAX, f64::INFINITY), |best, (i, d)| if d < best.1 { (i, d) } else { best })
        })
        .collect())
}

pub fn mmd(generated: &[PointCloud], reference: &[PointCloud]) -> Result<f64, MetricsError> {
    let nn = nearest_references(generated, reference)?;
    Ok(nn.iter().map(|(_, d)| d).sum::<f64>() / nn.len() as f64)
}

pub fn cov(generated: &[PointCloud], reference: &[PointCloud]) -> Result<f64, MetricsError> {
    let nn = nearest_references(generated, reference)?;
    let mut hit = vec![false; reference.len()];
    for (i, _) in nn {
        hit[i] = true;
    }
    Ok(hit.iter().filter(|h| **h).count() as f64 / reference.len() as f64)
}
