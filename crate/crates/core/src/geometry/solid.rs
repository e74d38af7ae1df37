use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use super::error::KernelError;
use super::sketch::Sketch;
use super::voxel::Aabb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BooleanOp {
    Cut,
    Fuse,
    Common,
}

impl BooleanOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BooleanOp::Cut => "cut",
            BooleanOp::Fuse => "fuse",
            BooleanOp::Common => "common",
        }
    }
}

impl fmt::Display for BooleanOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A sketch swept along its local +Z by `depth`.
#[derive(Debug, Clone)]
pub struct ExtrudedProfile {
    sketch: Arc<Sketch>,
    depth: f64,
    eps: f64,
}

impl ExtrudedProfile {
    pub fn new(sketch: Arc<Sketch>, depth: f64, eps: f64) -> Result<Self, KernelError> {
        if !depth.is_finite() {
            return Err(KernelError::NonFiniteInput("extrusion depth".into()));
        }
        if depth <= 0.0 {
            return Err(KernelError::NonPositiveDepth(depth));
        }
        if sketch.loops().is_empty() {
            return Err(KernelError::EmptySketch);
        }
        Ok(Self { sketch, depth, eps })
    }

    pub fn sketch(&self) -> &Arc<Sketch> {
        &self.sketch
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let local = self.sketch.frame().to_local(p);
        if local.z <= self.eps || local.z >= self.depth - self.eps {
            return false;
        }
        self.sketch.contains([local.x, local.y], self.eps)
    }

    pub fn bounding_box(&self) -> Aabb {
        let frame = self.sketch.frame();
        let [lo, hi] = self.sketch.bounds();
        let mut bb = Aabb::empty();
        for &x in &[lo[0], hi[0]] {
            for &y in &[lo[1], hi[1]] {
                for &z in &[0.0, self.depth] {
                    bb.include(&frame.to_global(&Vector3::new(x, y, z)));
                }
            }
        }
        bb
    }
}

/// Lazily evaluated constructive solid.
#[derive(Debug, Clone)]
pub enum CsgSolid {
    Leaf(ExtrudedProfile),
    Node {
        op: BooleanOp,
        base: Arc<CsgSolid>,
        tool: Arc<CsgSolid>,
    },
    MultiFuse(Vec<Arc<CsgSolid>>),
}

impl CsgSolid {
    pub fn leaf(profile: ExtrudedProfile) -> Self {
        CsgSolid::Leaf(profile)
    }

    pub fn node(op: BooleanOp, base: Arc<CsgSolid>, tool: Arc<CsgSolid>) -> Self {
        CsgSolid::Node { op, base, tool }
    }

    pub fn multi_fuse(children: Vec<Arc<CsgSolid>>) -> Result<Self, KernelError> {
        if children.len() < 2 {
            return Err(KernelError::FewerThanTwoOperands(children.len()));
        }
        Ok(CsgSolid::MultiFuse(children))
    }

    /// Point-membership classification under set semantics.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        match self {
            CsgSolid::Leaf(profile) => profile.contains(p),
            CsgSolid::Node { op, base, tool } => match op {
                BooleanOp::Cut => base.contains(p) && !tool.contains(p),
                BooleanOp::Fuse => base.contains(p) || tool.contains(p),
                BooleanOp::Common => base.contains(p) && tool.contains(p),
            },
            CsgSolid::MultiFuse(children) => children.iter().any(|c| c.contains(p)),
        }
    }

    /// Conservative bounds of the point set; `None` when provably empty.
    pub fn bounding_box(&self) -> Option<Aabb> {
        match self {
            CsgSolid::Leaf(profile) => Some(profile.bounding_box()),
            CsgSolid::Node { op, base, tool } => {
                let b = base.bounding_box();
                let t = tool.bounding_box();
                match op {
                    BooleanOp::Cut => b,
                    BooleanOp::Fuse => union_opt(b, t),
                    BooleanOp::Common => match (b, t) {
                        (Some(b), Some(t)) => b.intersection(&t),
                        _ => None,
                    },
                }
            }
            CsgSolid::MultiFuse(children) => children
                .iter()
                .map(|c| c.bounding_box())
                .fold(None, union_opt),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            CsgSolid::Leaf(_) => 1,
            CsgSolid::Node { base, tool, .. } => base.leaf_count() + tool.leaf_count(),
            CsgSolid::MultiFuse(children) => children.iter().map(|c| c.leaf_count()).sum(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            CsgSolid::Leaf(_) => 0,
            CsgSolid::Node { base, tool, .. } => 1 + base.depth().max(tool.depth()),
            CsgSolid::MultiFuse(children) => {
                1 + children.iter().map(|c| c.depth()).max().unwrap_or(0)
            }
        }
    }

    /// Same tree with every leaf frame moved by `x -> rot * x + shift`.
    pub fn transformed(&self, rot: &Matrix3<f64>, shift: &Vector3<f64>) -> Result<Self, KernelError> {
        Ok(match self {
            CsgSolid::Leaf(profile) => {
                let sk = profile.sketch();
                let frame = Arc::new(sk.frame().transformed(rot, shift));
                let moved = Sketch::with_frame(sk, frame);
                CsgSolid::Leaf(ExtrudedProfile::new(Arc::new(moved), profile.depth, profile.eps)?)
            }
            CsgSolid::Node { op, base, tool } => CsgSolid::Node {
                op: *op,
                base: Arc::new(base.transformed(rot, shift)?),
                tool: Arc::new(tool.transformed(rot, shift)?),
            },
            CsgSolid::MultiFuse(children) => CsgSolid::MultiFuse(
                children
                    .iter()
                    .map(|c| c.transformed(rot, shift).map(Arc::new))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }
}

fn union_opt(a: Option<Aabb>, b: Option<Aabb>) -> Option<Aabb> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.union(&b)),
        (a, None) => a,
        (None, b) => b,
    }
}
