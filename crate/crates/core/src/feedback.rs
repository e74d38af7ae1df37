//! Agent-facing feedback: templated success/fail messages and the object
//! list snapshot attached to every tool observation.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::geometry::{BooleanOp, Document, KernelError, ObjectKind, ObjectSummary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub description: String,
}

/// Raw outcome of one tool invocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceResult {
    pub success: bool,
    pub actions: Vec<Action>,
}

impl InterfaceResult {
    pub fn ok(description: impl Into<String>) -> Self {
        Self {
            success: true,
            actions: vec![Action { description: description.into() }],
        }
    }

    pub fn fail(description: impl Into<String>) -> Self {
        Self {
            success: false,
            actions: vec![Action { description: description.into() }],
        }
    }

    pub fn message(&self) -> String {
        self.actions
            .iter()
            .map(|a| a.description.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Success,
    Fail,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Success => "success",
            Label::Fail => "fail",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What the agent sees after a tool call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub label: Label,
    pub message: String,
    pub objects: Vec<ObjectSummary>,
}

/// Message templates. Slot values are inserted verbatim; kernel error text
/// comes from `KernelError`'s `Display`.
pub mod templates {
    use super::*;

    pub const SKETCH_RETRY_HINT: &str = "Please try creating each profile loop one by one.";

    pub fn coord_system_success(name: &str, origin: [f64; 3], rotation: [f64; 3]) -> String {
        format!(
            "Successfully created coordinate system {name} with origin ({}, {}, {}) and rotation ({}, {}, {}) degrees.",
            origin[0], origin[1], origin[2], rotation[0], rotation[1], rotation[2]
        )
    }

    pub fn coord_system_failure(name: &str, err: &KernelError) -> String {
        format!("Coordinate system {name} creation failed. Error: {err}")
    }

    pub fn sketch_success(sketch: &str, face: &str) -> String {
        format!("Successfully created sketch {sketch} and its sketch-derived face {face}.")
    }

    pub fn sketch_geometric_failure(detail: &str) -> String {
        format!("Sketch creation failed: {detail}. {SKETCH_RETRY_HINT}")
    }

    pub fn sketch_internal_failure(detail: &str) -> String {
        format!("Sketch creation failed due to an internal error: {detail}")
    }

    pub fn sketch_failure(err: &KernelError) -> String {
        if err.is_geometric() {
            sketch_geometric_failure(&err.to_string())
        } else {
            sketch_internal_failure(&err.to_string())
        }
    }

    pub fn extrude_success(sketch: &str, depth: f64, solid: &str) -> String {
        format!(
            "Successfully extruded the face of sketch {sketch} by {depth} into a new solid {solid}."
        )
    }

    pub fn extrude_failure(sketch: &str, err: &KernelError) -> String {
        format!("Extrusion of sketch {sketch} failed. Error: {err}")
    }

    pub fn boolean_success(name: &str, op: BooleanOp) -> String {
        format!("A new solid {name} was created by performing the Boolean operation {op}.")
    }

    pub fn boolean_failure(op: BooleanOp, base: &str, tool: &str, err: &KernelError) -> String {
        format!(
            "The Boolean operation {op} between base object {base} and tool object {tool} failed. Error: {err}"
        )
    }

    pub fn multiple_fuse_success(name: &str, objects: &[String]) -> String {
        format!(
            "A new solid {name} was created by fusing the objects {}.",
            objects.join(", ")
        )
    }

    pub fn multiple_fuse_failure(objects: &[String], err: &KernelError) -> String {
        format!(
            "The multiple fuse of objects [{}] failed. Error: {err}",
            objects.join(", ")
        )
    }

    pub fn invalid_call(detail: &str) -> String {
        format!("The tool call could not be executed: {detail}")
    }

    /// Fragments that only ever appear in failure messages.
    pub const FAILURE_MARKERS: &[&str] = &[" failed", "could not be executed", "internal error"];
}

/// Geometric object list: solids in creation order with consumed flags.
pub fn object_list(doc: &Document) -> Vec<ObjectSummary> {
    doc.summaries()
        .into_iter()
        .filter(|s| s.kind == ObjectKind::Solid)
        .collect()
}

pub fn render_feedback(_tool_name: &str, result: &InterfaceResult, doc: &Document) -> Observation {
    Observation {
        label: if result.success { Label::Success } else { Label::Fail },
        message: result.message(),
        objects: object_list(doc),
    }
}

/// Observation for a call that never reached the kernel (parse or argument error).
pub fn invalid_call_observation(detail: &str, doc: &Document) -> Observation {
    Observation {
        label: Label::Fail,
        message: templates::invalid_call(detail),
        objects: object_list(doc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SketchElement;

    #[test]
    fn sketch_success_message() {
        let msg = templates::sketch_success("S1", "S1_Face");
        assert!(msg.contains("Successfully created sketch S1 and its sketch-derived face"));
    }

    #[test]
    fn boolean_failure_message() {
        let msg = templates::boolean_failure(BooleanOp::Cut, "A", "B", &KernelError::EmptyResult);
        assert!(msg.contains("The Boolean operation cut between base object A and tool object B failed."));
    }

    #[test]
    fn internal_errors_use_internal_template() {
        let msg = templates::sketch_failure(&KernelError::Internal("kernel crashed".into()));
        assert!(msg.contains("failed due to an internal error"));
        let geo = templates::sketch_failure(&KernelError::OpenLoop { gap: 0.5 });
        assert!(geo.ends_with(templates::SKETCH_RETRY_HINT));
    }

    #[test]
    fn success_templates_carry_no_failure_markers() {
        let msgs = [
            templates::coord_system_success("CS", [0.0; 3], [0.0; 3]),
            templates::sketch_success("S", "S_Face"),
            templates::extrude_success("S", 1.0, "B"),
            templates::boolean_success("B", BooleanOp::Fuse),
            templates::multiple_fuse_success("M", &["a".into(), "b".into()]),
        ];
        for m in msgs {
            for marker in templates::FAILURE_MARKERS {
                assert!(!m.contains(marker), "{m}");
            }
        }
    }

    #[test]
    fn object_list_tracks_solids_in_creation_order() {
        let mut doc = Document::default();
        assert!(object_list(&doc).is_empty());
        doc.set_coord_system("CS1", [0.0; 3], [0.0; 3]).unwrap();
        let sq = |s: f64| {
            let p = [[0.0, 0.0], [s, 0.0], [s, s], [0.0, s]];
            (0..4)
                .map(|i| SketchElement::Line { start: p[i], end: p[(i + 1) % 4] })
                .collect::<Vec<_>>()
        };
        doc.create_sketch("S1", "CS1", sq(4.0)).unwrap();
        doc.extrude("S1", 2.0, "Cube").unwrap();
        doc.create_sketch("S2", "CS1", vec![SketchElement::Circle { center: [2.0, 2.0], radius: 1.0 }])
            .unwrap();
        doc.extrude("S2", 2.0, "Cyl").unwrap();
        doc.boolean("Cube", "Cyl", BooleanOp::Cut, "Part").unwrap();
        let list = object_list(&doc);
        let names: Vec<_> = list.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(names, ["Cube", "Cyl", "Part"]);
        assert_eq!(list.iter().filter(|o| o.consumed).count(), 2);
        assert!(!list[2].consumed);
    }
}
