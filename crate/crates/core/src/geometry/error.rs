use thiserror::Error;

/// Failures raised by the modeling kernel.
///
/// The `Display` text of each variant is embedded verbatim in agent-facing
/// feedback, so wording changes here are visible to policies and golden tests.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("an object named {0} already exists")]
    DuplicateName(String),
    #[error("invalid object name {0:?}: names must be 1-128 characters of letters, digits, '_', '-' or '.'")]
    InvalidName(String),
    #[error("non-finite value in {0}")]
    NonFiniteInput(String),
    #[error("unknown coordinate system {0}")]
    UnknownFrame(String),
    #[error("sketch has no elements")]
    EmptySketch,
    #[error("profile loop is not closed (gap of {gap} between consecutive elements)")]
    OpenLoop { gap: f64 },
    #[error("profile loop {loop_index} intersects itself or another loop")]
    SelfIntersection { loop_index: usize },
    #[error("unsupported sketch element: {0}")]
    UnsupportedElement(String),
    #[error("invalid sketch element: {0}")]
    InvalidElement(String),
    #[error("unknown sketch {0}")]
    UnknownSketch(String),
    #[error("extrusion depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("object {0} is not a solid")]
    NotASolid(String),
    #[error("object {0} was already consumed by a previous operation")]
    OperandConsumed(String),
    #[error("the result is an empty solid")]
    EmptyResult,
    #[error("at least two objects are required, got {0}")]
    FewerThanTwoOperands(usize),
    #[error("solid is empty")]
    EmptySolid,
    #[error("voxel resolution must be at least {min}, got {got}")]
    InvalidResolution { got: usize, min: usize },
    #[error("{0}")]
    Internal(String),
}

impl KernelError {
    /// Whether the failure stems from the submitted geometry itself, as opposed
    /// to bookkeeping (names, references) or an internal fault.
    pub fn is_geometric(&self) -> bool {
        matches!(
            self,
            KernelError::EmptySketch
                | KernelError::OpenLoop { .. }
                | KernelError::SelfIntersection { .. }
                | KernelError::UnsupportedElement(_)
                | KernelError::InvalidElement(_)
        )
    }
}
