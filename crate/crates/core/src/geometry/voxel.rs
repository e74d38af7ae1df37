use nalgebra::Vector3;
use rayon::prelude::*;

use super::error::KernelError;
use super::solid::CsgSolid;

/// Padding, in cells, added around a bounding box before voxelization.
/// A whole number of cells keeps cell faces aligned with the box faces.
pub const GRID_PAD_CELLS: usize = 2;
pub const MIN_RESOLUTION: usize = 2 * GRID_PAD_CELLS + 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        Self { min, max }
    }

    pub fn empty() -> Self {
        Self {
            min: Vector3::repeat(f64::INFINITY),
            max: Vector3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn include(&mut self, p: &Vector3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb::new(self.min.inf(&other.min), self.max.sup(&other.max))
    }

    pub fn intersection(&self, other: &Aabb) -> Option<Aabb> {
        let min = self.min.sup(&other.min);
        let max = self.max.inf(&other.max);
        if (0..3).all(|k| min[k] < max[k]) {
            Some(Aabb::new(min, max))
        } else {
            None
        }
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn contains_box(&self, inner: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= inner.min[k] && self.max[k] >= inner.max[k])
    }

    /// Grid bounds for `resolution` cells per axis that leave exactly
    /// `GRID_PAD_CELLS` empty cells on every side of `self`.
    pub fn padded_for_grid(&self, resolution: usize) -> Aabb {
        let inner = (resolution - 2 * GRID_PAD_CELLS) as f64;
        let pad = GRID_PAD_CELLS as f64;
        let ext = self.extent();
        let mut min = self.min;
        let mut max = self.max;
        for k in 0..3 {
            let e = if ext[k] > 0.0 { ext[k] } else { 1e-9 };
            let h = e / inner;
            min[k] -= pad * h;
            max[k] = self.min[k] + e + pad * h;
        }
        Aabb::new(min, max)
    }
}

/// Boolean occupancy sampled at cell centers, x fastest then y then z.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    resolution: usize,
    bounds: Aabb,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn cell_size(&self) -> Vector3<f64> {
        self.bounds.extent() / self.resolution as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size().product()
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    pub fn volume(&self) -> f64 {
        self.occupied_count() as f64 * self.cell_volume()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.resolution + j) * self.resolution + i
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.cells[self.index(i, j, k)]
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        cell_center(&self.bounds, self.resolution, i, j, k)
    }

    pub fn cell_min(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        let h = self.cell_size();
        self.bounds.min + Vector3::new(i as f64 * h.x, j as f64 * h.y, k as f64 * h.z)
    }

    /// Occupied cells with at least one empty (or out-of-grid) face neighbour.
    pub fn shell_cells(&self) -> Vec<[usize; 3]> {
        let r = self.resolution;
        let mut out = Vec::new();
        for k in 0..r {
            for j in 0..r {
                for i in 0..r {
                    if !self.get(i, j, k) {
                        continue;
                    }
                    let boundary = i == 0
                        || j == 0
                        || k == 0
                        || i + 1 == r
                        || j + 1 == r
                        || k + 1 == r
                        || !self.get(i - 1, j, k)
                        || !self.get(i + 1, j, k)
                        || !self.get(i, j - 1, k)
                        || !self.get(i, j + 1, k)
                        || !self.get(i, j, k - 1)
                        || !self.get(i, j, k + 1);
                    if boundary {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }
}

fn cell_center(bounds: &Aabb, r: usize, i: usize, j: usize, k: usize) -> Vector3<f64> {
    let h = bounds.extent() / r as f64;
    bounds.min
        + Vector3::new(
            (i as f64 + 0.5) * h.x,
            (j as f64 + 0.5) * h.y,
            (k as f64 + 0.5) * h.z,
        )
}

/// Samples `solid` on a grid spanning `bounds`. Slices are evaluated in
/// parallel; every cell is independent so the result does not depend on
/// scheduling.
pub fn voxelize_in(solid: &CsgSolid, bounds: &Aabb, resolution: usize) -> Result<OccupancyGrid, KernelError> {
    if resolution < 2 {
        return Err(KernelError::InvalidResolution { got: resolution, min: 2 });
    }
    let r = resolution;
    let cells: Vec<bool> = (0..r)
        .into_par_iter()
        .flat_map_iter(|k| {
            (0..r).flat_map(move |j| {
                (0..r).map(move |i| solid.contains(&cell_center(bounds, r, i, j, k)))
            })
        })
        .collect();
    Ok(OccupancyGrid {
        resolution: r,
        bounds: *bounds,
        cells,
    })
}

/// Voxelizes over the solid's bounding box padded by `GRID_PAD_CELLS` cells.
pub fn voxelize(solid: &CsgSolid, resolution: usize) -> Result<OccupancyGrid, KernelError> {
    if resolution < MIN_RESOLUTION {
        return Err(KernelError::InvalidResolution { got: resolution, min: MIN_RESOLUTION });
    }
    let bb = solid.bounding_box().ok_or(KernelError::EmptySolid)?;
    let grid = voxelize_in(solid, &bb.padded_for_grid(resolution), resolution)?;
    if grid.occupied_count() == 0 {
        return Err(KernelError::EmptySolid);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padded_bounds_strictly_contain_one_cell_inflation() {
        let bb = Aabb::new(Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 2.0, 3.0));
        let g = bb.padded_for_grid(64);
        let h = g.extent() / 64.0;
        for k in 0..3 {
            assert!(g.min[k] < bb.min[k] - h[k]);
            assert!(g.max[k] > bb.max[k] + h[k]);
            // Box faces sit on cell faces.
            let cells = (bb.max[k] - g.min[k]) / h[k];
            assert!((cells - cells.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn aabb_intersection_empty_when_disjoint() {
        let a = Aabb::new(Vector3::zeros(), Vector3::repeat(1.0));
        let b = Aabb::new(Vector3::repeat(2.0), Vector3::repeat(3.0));
        assert!(a.intersection(&b).is_none());
        assert!(a.union(&b).contains_box(&a));
    }
}
