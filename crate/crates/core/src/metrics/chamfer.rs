//! Two-sided squared chamfer distance with a k-d tree for nearest-neighbour
//! queries.

use rayon::prelude::*;

use super::cloud::{Point3, PointCloud};

fn sq_dist(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Static 3-d tree over a borrowed point slice. Nodes are stored implicitly:
/// the median of each index range is the node, split axis cycles x, y, z.
pub struct KdTree<'a> {
    points: &'a [Point3],
    order: Vec<usize>,
}

impl<'a> KdTree<'a> {
    pub fn build(points: &'a [Point3]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build_range(points, &mut order, 0);
        Self { points, order }
    }

    /// Squared distance to the nearest stored point.
    pub fn nearest_sq(&self, q: &Point3) -> f64 {
        let mut best = f64::INFINITY;
        self.search(q, 0, self.order.len(), 0, &mut best);
        best
    }

    fn search(&self, q: &Point3, lo: usize, hi: usize, axis: usize, best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = &self.points[self.order[mid]];
        let d = sq_dist(p, q);
        if d < *best {
            *best = d;
        }
        let diff = q[axis] - p[axis];
        let next = (axis + 1) % 3;
        let (near, far) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(q, near.0, near.1, next, best);
        if diff * diff < *best {
            self.search(q, far.0, far.1, next, best);
        }
    }
}

fn build_range(points: &[Point3], idx: &mut [usize], axis: usize) {
    if idx.len() <= 1 {
        return;
    }
    let mid = idx.len() / 2;
    idx.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
    let (left, right) = idx.split_at_mut(mid);
    let next = (axis + 1) % 3;
    build_range(points, left, next);
    build_range(points, &mut right[1..], next);
}

fn mean_nearest(from: &[Point3], tree: &KdTree<'_>) -> f64 {
    let mins: Vec<f64> = from.par_iter().map(|p| tree.nearest_sq(p)).collect();
    mins.iter().sum::<f64>() / from.len() as f64
}

/// `mean_x min_y |x-y|^2 + mean_y min_x |y-x|^2`. Per-point minima are
/// reduced sequentially so the result is independent of thread count.
pub fn chamfer(x: &PointCloud, y: &PointCloud) -> f64 {
    let tx = KdTree::build(&x.points);
    let ty = KdTree::build(&y.points);
    mean_nearest(&x.points, &ty) + mean_nearest(&y.points, &tx)
}
