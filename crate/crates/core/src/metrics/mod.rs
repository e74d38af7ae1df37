//! Shape comparison metrics over kernel solids and sampled point clouds.

mod chamfer;
mod cloud;
mod divergence;
mod program;
mod sets;
mod volume;

pub use chamfer::{chamfer, KdTree};
pub use cloud::{sample_points, Point3, PointCloud, Provenance};
pub use divergence::{jsd, jsd_report, JsdReport, VoxelDistribution, JSD_RESOLUTION, JSD_SMOOTHING};
pub use program::{classify_conversion, invalidity_ratio, parameter_density, ConversionOutcome};
pub use sets::{cov, mmd, nearest_references};
pub use volume::iou;

use crate::geometry::KernelError;

pub const DEFAULT_POINTS: usize = 2048;
pub const METRIC_RESOLUTION: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("set of point clouds is empty")]
    EmptySet,
    #[error("resolution mismatch: {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },
    #[error("distribution weights must be finite, non-negative and not all zero")]
    InvalidDistribution,
    #[error("part count must be at least 1")]
    ZeroParts,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Samples `n` surface points from `solid` and normalizes them.
pub fn normalized_cloud(solid: &crate::geometry::CsgSolid, n: usize, seed: u64, resolution: usize) -> Result<PointCloud, MetricsError> {
    Ok(sample_points(solid, n, seed, resolution)?.normalize())
}
