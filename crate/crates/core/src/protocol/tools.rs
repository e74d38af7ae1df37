//! The six-tool modeling library. Each tool decodes its own argument
//! schema and drives one kernel operation; the registry resolves tools by
//! their wire name.

use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::sync::Arc;
use thiserror::Error;

use crate::feedback::{render_feedback, templates, InterfaceResult, Observation};
use crate::geometry::{BooleanOp, Document, SketchElement};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToolError {
    #[error("unknown tool {0}")]
    UnknownTool(String),
    #[error("invalid arguments for {tool}: {detail}")]
    InvalidArguments { tool: String, detail: String },
}

/// A declared tool call: wire name plus a JSON argument object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    pub arguments: Value,
}

impl ToolCall {
    pub fn new(name: impl Into<String>, arguments: Value) -> Self {
        Self {
            name: name.into(),
            arguments,
        }
    }
}

pub trait Tool: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn input_schema(&self) -> Value;
    /// Runs the tool. Kernel failures are reported inside the
    /// `InterfaceResult`; only undecodable arguments are an `Err`.
    fn invoke(&self, doc: &mut Document, arguments: &Value) -> Result<InterfaceResult, ToolError>;
}

fn decode<T: DeserializeOwned>(tool: &str, arguments: &Value) -> Result<T, ToolError> {
    T::deserialize(arguments).map_err(|e| ToolError::InvalidArguments {
        tool: tool.to_string(),
        detail: e.to_string(),
    })
}

pub const SET_COORD_SYSTEM: &str = "freecad-set_coord_system";
pub const CREATE_COMPLEX_SKETCH: &str = "freecad-create_complex_sketch";
pub const CREATE_SIMPLE_SKETCH: &str = "freecad-create_simple_sketch";
pub const BOOLEAN_OPERATION: &str = "freecad-boolean_operation";
pub const MULTIPLE_FUSE: &str = "freecad-multiple_fuse";
pub const EXTRUDE_FACE: &str = "freecad-extrude_face";

/// Wire names of the standard library, in advertised order.
pub const LIBRARY: [&str; 6] = [
    SET_COORD_SYSTEM,
    CREATE_COMPLEX_SKETCH,
    CREATE_SIMPLE_SKETCH,
    BOOLEAN_OPERATION,
    MULTIPLE_FUSE,
    EXTRUDE_FACE,
];

fn vec_schema(len: usize, what: &str) -> Value {
    json!({
        "type": "array",
        "items": {"type": "number"},
        "minItems": len,
        "maxItems": len,
        "description": what
    })
}

fn element_schema() -> Value {
    json!({
        "type": "object",
        "description": "Sketch element in sketch-local coordinates. line: start, end; arc: center, radius, start_angle, end_angle (degrees, counter-clockwise); circle: center, radius.",
        "properties": {
            "type": {"type": "string", "enum": ["line", "arc", "circle"]},
            "start": vec_schema(2, "line start point"),
            "end": vec_schema(2, "line end point"),
            "center": vec_schema(2, "arc or circle center"),
            "radius": {"type": "number", "exclusiveMinimum": 0},
            "start_angle": {"type": "number"},
            "end_angle": {"type": "number"}
        },
        "required": ["type"]
    })
}

pub struct SetCoordSystem;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SetCoordSystemArgs {
    name: String,
    origin: [f64; 3],
    rotation: [f64; 3],
}

impl Tool for SetCoordSystem {
    fn name(&self) -> &'static str {
        SET_COORD_SYSTEM
    }

    fn description(&self) -> &'static str {
        "Creates a named coordinate system. rotation holds angles in degrees about X, Y and Z, applied in intrinsic Z-Y-X order (R = Rz * Ry * Rx)."
    }

    fn input_schema(&self) -> Value {
        json!({
            "type": "object",
            "properties": {
                "name": {"type": "string"},
                "origin": vec_schema(3, "origin in model units"),
                "rotation": vec_schema(3, "rotation about X, Y, Z in degrees")
            },
            "required": ["name", "origin", "rotation"],
            "additionalProperties": false
        })
    }

    fn invoke(&self, doc: &mut Document, arguments: &Value) -> Result<InterfaceResult, ToolError> {
        let a: SetCoordSystemArgs = decode(self.name(), arguments)?;
        Ok(match doc.set_coord_system(&a.name, a.origin, a.rotation) {
            Ok(_) => InterfaceResult::ok(templates::coord_system_success(&a.name, a.origin, a.rotation)),
            Err(e) => InterfaceResult::fail(templates::coord_system_failure(&a.name, &e)),
        })
    }
}

pub struct CreateComplexSketch;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexSketchArgs {
    elements: Vec<SketchElement>,
    sketch_name: String,
    frame: String,
}

fn sketch_result(doc: &mut Document, name: &str, frame: &str, elements: Vec<SketchElement>) -> InterfaceResult {
    match doc.create_sketch(name, frame, elements) {
        Ok(sk) => InterfaceResult::ok(templates::sketch_success(sk.name(), &sk.face_name())),
        Err(e) => InterfaceResult::fail(templates::sketch_failure(&e)),
    }
}

impl Tool for CreateComplexSketch {
    fn name(&self) -> &'static str {
        CREATE_COMPLEX_SKETCH
    }

    fn description(&self) -> &'static str {
        "Creates a sketch from several lines, arcs and circles on a coordinate system. Elements are chained into closed loops; nested loops are filled with the even-odd rule."
    }

    fn input_schema(&self) -> Value {
        json!({
            "type": "object",
            "properties": {
                "elements": {"type": "array", "items": element_schema(), "minItems": 1},
                "sketch_name": {"type": "string"},
                "frame": {"type": "string", "description": "name of an existing coordinate system"}
            },
            "required": ["elements", "sketch_name", "frame"],
            "additionalProperties": false
        })
    }

    fn invoke(&self, doc: &mut Document, arguments: &Value) -> Result<InterfaceResult, ToolError> {
        let a: ComplexSketchArgs = decode(self.name(), arguments)?;
        Ok(sketch_result(doc, &a.sketch_name, &a.frame, a.elements))
    }
}

pub struct CreateSimpleSketch;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimpleSketchArgs {
    element: SketchElement,
    sketch_name: String,
    frame: String,
}

impl Tool for CreateSimpleSketch {
    fn name(&self) -> &'static str {
        CREATE_SIMPLE_SKETCH
    }

    fn description(&self) -> &'static str {
        "Creates a sketch from a single element. Only elements that close on their own (circles) form a valid profile."
    }

    fn input_schema(&self) -> Value {
        json!({
            "type": "object",
            "properties": {
                "element": element_schema(),
                "sketch_name": {"type": "string"},
                "frame": {"type": "string", "description": "name of an existing coordinate system"}
            },
            "required": ["element", "sketch_name", "frame"],
            "additionalProperties": false
        })
    }

    fn invoke(&self, doc: &mut Document, arguments: &Value) -> Result<InterfaceResult, ToolError> {
        let a: SimpleSketchArgs = decode(self.name(), arguments)?;
        Ok(sketch_result(doc, &a.sketch_name, &a.frame, vec![a.element]))
    }
}

pub struct ExtrudeFace;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtrudeArgs {
    sketch_name: String,
    depth: f64,
    solid_name: String,
}

impl Tool for ExtrudeFace {
    fn name(&self) -> &'static str {
        EXTRUDE_FACE
    }

    fn description(&self) -> &'static str {
        "Extrudes the face of a sketch along the local +Z axis of its coordinate system by a positive depth, creating a new solid."
    }

    fn input_schema(&self) -> Value {
        json!({
            "type": "object",
            "properties": {
                "sketch_name": {"type": "string"},
                "depth": {"type": "number", "exclusiveMinimum": 0},
                "solid_name": {"type": "string"}
            },
            "required": ["sketch_name", "depth", "solid_name"],
            "additionalProperties": false
        })
    }

    fn invoke(&self, doc: &mut Document, arguments: &Value) -> Result<InterfaceResult, ToolError> {
        let a: ExtrudeArgs = decode(self.name(), arguments)?;
        Ok(match doc.extrude(&a.sketch_name, a.depth, &a.solid_name) {
            Ok(_) => InterfaceResult::ok(templates::extrude_success(&a.sketch_name, a.depth, &a.solid_name)),
            Err(e) => InterfaceResult::fail(templates::extrude_failure(&a.sketch_name, &e)),
        })
    }
}

pub struct BooleanOperation;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BooleanArgs {
    base_object_name: String,
    tool_object_name: String,
    operation: BooleanOp,
    name: String,
}

impl Tool for BooleanOperation {
    fn name(&self) -> &'static str {
        BOOLEAN_OPERATION
    }

    fn description(&self) -> &'static str {
        "Performs a boolean operation between two solids: cut subtracts the tool object from the base object, fuse merges them, common keeps their intersection."
    }

    fn input_schema(&self) -> Value {
        json!({
            "type": "object",
            "properties": {
                "base_object_name": {"type": "string"},
                "tool_object_name": {"type": "string"},
                "operation": {"type": "string", "enum": ["cut", "fuse", "common"]},
                "name": {"type": "string", "description": "name of the resulting solid"}
            },
            "required": ["base_object_name", "tool_object_name", "operation", "name"],
            "additionalProperties": false
        })
    }

    fn invoke(&self, doc: &mut Document, arguments: &Value) -> Result<InterfaceResult, ToolError> {
        let a: BooleanArgs = decode(self.name(), arguments)?;
        Ok(
            match doc.boolean(&a.base_object_name, &a.tool_object_name, a.operation, &a.name) {
                Ok(_) => InterfaceResult::ok(templates::boolean_success(&a.name, a.operation)),
                Err(e) => InterfaceResult::fail(templates::boolean_failure(
                    a.operation,
                    &a.base_object_name,
                    &a.tool_object_name,
                    &e,
                )),
            },
        )
    }
}

pub struct MultipleFuse;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MultipleFuseArgs {
    object_names: Vec<String>,
    name: String,
}

impl Tool for MultipleFuse {
    fn name(&self) -> &'static str {
        MULTIPLE_FUSE
    }

    fn description(&self) -> &'static str {
        "Fuses two or more solids into one new solid."
    }

    fn input_schema(&self) -> Value {
        json!({
            "type": "object",
            "properties": {
                "object_names": {"type": "array", "items": {"type": "string"}, "minItems": 2},
                "name": {"type": "string", "description": "name of the resulting solid"}
            },
            "required": ["object_names", "name"],
            "additionalProperties": false
        })
    }

    fn invoke(&self, doc: &mut Document, arguments: &Value) -> Result<InterfaceResult, ToolError> {
        let a: MultipleFuseArgs = decode(self.name(), arguments)?;
        Ok(match doc.multiple_fuse(&a.object_names, &a.name) {
            Ok(_) => InterfaceResult::ok(templates::multiple_fuse_success(&a.name, &a.object_names)),
            Err(e) => InterfaceResult::fail(templates::multiple_fuse_failure(&a.object_names, &e)),
        })
    }
}

/// Tool descriptor as advertised by `tools/list`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDescriptor {
    pub name: String,
    pub description: String,
    #[serde(rename = "inputSchema")]
    pub input_schema: Value,
}

#[derive(Clone)]
pub struct ToolRegistry {
    tools: IndexMap<&'static str, Arc<dyn Tool>>,
}

impl Default for ToolRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl ToolRegistry {
    pub fn empty() -> Self {
        Self { tools: IndexMap::new() }
    }

    /// The full modeling library.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(SetCoordSystem));
        r.register(Arc::new(CreateComplexSketch));
        r.register(Arc::new(CreateSimpleSketch));
        r.register(Arc::new(BooleanOperation));
        r.register(Arc::new(MultipleFuse));
        r.register(Arc::new(ExtrudeFace));
        r
    }

    pub fn register(&mut self, tool: Arc<dyn Tool>) {
        self.tools.insert(tool.name(), tool);
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn Tool>> {
        self.tools.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tools.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.tools.keys().copied()
    }

    pub fn descriptors(&self) -> Vec<ToolDescriptor> {
        self.tools
            .values()
            .map(|t| ToolDescriptor {
                name: t.name().to_string(),
                description: t.description().to_string(),
                input_schema: t.input_schema(),
            })
            .collect()
    }

    pub fn invoke(&self, doc: &mut Document, call: &ToolCall) -> Result<InterfaceResult, ToolError> {
        let tool = self
            .get(&call.name)
            .ok_or_else(|| ToolError::UnknownTool(call.name.clone()))?;
        tool.invoke(doc, &call.arguments)
    }

    /// Executes a call and wraps the outcome as an observation. Argument and
    /// lookup errors become fail observations rather than errors.
    pub fn execute(&self, doc: &mut Document, call: &ToolCall) -> Observation {
        match self.invoke(doc, call) {
            Ok(result) => render_feedback(&call.name, &result, doc),
            Err(e) => crate::feedback::invalid_call_observation(&e.to_string(), doc),
        }
    }
}
