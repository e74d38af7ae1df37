use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::geometry::{voxelize, CsgSolid};

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub provenance: Option<Provenance>,
    pub normalized: bool,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self, MetricsError> {
        if points.is_empty() {
            return Err(MetricsError::EmptyCloud);
        }
        Ok(Self {
            points,
            provenance: None,
            normalized: false,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn bounds(&self) -> (Point3, Point3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Centers the bounding box on the origin and scales isotropically so the
    /// longest bounding-box edge is 1, which keeps every coordinate in
    /// `[-0.5, 0.5]`. A zero-extent cloud is only translated.
    pub fn normalize(&self) -> Self {
        let (lo, hi) = self.bounds();
        let center = [0, 1, 2].map(|k| 0.5 * (lo[k] + hi[k]));
        let longest = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        let scale = if longest > 0.0 { 1.0 / longest } else { 1.0 };
        let points = self
            .points
            .iter()
            .map(|p| [0, 1, 2].map(|k| ((p[k] - center[k]) * scale).clamp(-0.5, 0.5)))
            .collect();
        Self {
            points,
            provenance: self.provenance.clone(),
            normalized: true,
        }
    }
}

/// Draws `n` points uniformly over the surface-shell voxels of `solid`
/// (occupied cells with at least one empty face neighbour), each jittered
/// uniformly inside its cell. Deterministic for a given seed.
pub fn sample_points(solid: &CsgSolid, n: usize, seed: u64, resolution: usize) -> Result<PointCloud, MetricsError> {
    if n == 0 {
        return Err(MetricsError::EmptyCloud);
    }
    let grid = voxelize(solid, resolution)?;
    let shell = grid.shell_cells();
    if shell.is_empty() {
        return Err(MetricsError::Kernel(crate::geometry::KernelError::EmptySolid));
    }
    let h = grid.cell_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let [i, j, k] = shell[rng.gen_range(0..shell.len())];
            let lo = grid.cell_min(i, j, k);
            let jitter = Vector3::new(rng.gen::<f64>() * h.x, rng.gen::<f64>() * h.y, rng.gen::<f64>() * h.z);
            let p = lo + jitter;
            [p.x, p.y, p.z]
        })
        .collect();
    Ok(PointCloud {
        points,
        provenance: Some(Provenance {
            source: "surface-shell".into(),
            samples: n,
            seed,
        }),
        normalized: false,
    })
}
