//! Solid-modeling kernel: frames, sketches, extrusion and boolean trees
//! evaluated by point-membership classification.

mod document;
mod error;
mod frame;
mod sketch;
mod solid;
mod voxel;

pub use document::{Document, Object, ObjectKind, ObjectSummary};
pub use error::KernelError;
pub use frame::{euler_zyx_matrix, CoordinateSystem};
pub use sketch::{build_loops, polygonize_circle, Loop, Point2, Sketch, SketchElement};
pub use solid::{BooleanOp, CsgSolid, ExtrudedProfile};
pub use voxel::{voxelize, voxelize_in, Aabb, OccupancyGrid, GRID_PAD_CELLS, MIN_RESOLUTION};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// Polygon segments per full turn for arcs and circles.
    pub arc_segments: usize,
    /// Maximum endpoint gap when chaining elements into a loop.
    pub loop_close_tol: f64,
    /// Distance from a boundary under which a point counts as outside.
    pub eps_geom: f64,
    /// Grid used to detect empty cut/common results.
    pub empty_check_resolution: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            arc_segments: 64,
            loop_close_tol: 1e-6,
            eps_geom: 1e-9,
            empty_check_resolution: 32,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.arc_segments < 8 {
            return Err(format!("arc_segments must be >= 8, got {}", self.arc_segments));
        }
        if !(self.loop_close_tol > 0.0 && self.loop_close_tol < 1e-2) {
            return Err(format!("loop_close_tol must be in (0, 0.01), got {}", self.loop_close_tol));
        }
        if !(self.eps_geom >= 0.0 && self.eps_geom < self.loop_close_tol) {
            return Err(format!("eps_geom must be in [0, loop_close_tol), got {}", self.eps_geom));
        }
        if self.empty_check_resolution < MIN_RESOLUTION {
            return Err(format!(
                "empty_check_resolution must be >= {MIN_RESOLUTION}, got {}",
                self.empty_check_resolution
            ));
        }
        Ok(())
    }
}
