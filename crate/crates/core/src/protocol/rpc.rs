//! Line-delimited JSON-RPC 2.0 server exposing the tool library.
//!
//! Each request is one JSON object on one line; each response likewise.
//! Supported methods: `initialize`, `tools/list`, `tools/call`.
//! Requests without an `id` are notifications and get no reply.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::io::{self, BufRead, Write};

use super::tags::render_tool_response;
use super::tools::{ToolCall, ToolError, ToolRegistry};
use crate::feedback::{render_feedback, Label, Observation};
use crate::geometry::{Document, KernelConfig};

pub const PARSE_ERROR: i64 = -32700;
pub const INVALID_REQUEST: i64 = -32600;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpcError {
    pub code: i64,
    pub message: String,
}

/// One executed `tools/call`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStep {
    pub call: ToolCall,
    pub observation: Observation,
}

/// State behind one stream pair: a fresh document plus the call log.
pub struct Session {
    registry: ToolRegistry,
    document: Document,
    log: Vec<SessionStep>,
}

impl Session {
    pub fn new(registry: ToolRegistry, config: KernelConfig) -> Self {
        Self {
            registry,
            document: Document::new(config),
            log: Vec::new(),
        }
    }

    pub fn document(&self) -> &Document {
        &self.document
    }

    pub fn log(&self) -> &[SessionStep] {
        &self.log
    }

    pub fn into_log(self) -> Vec<SessionStep> {
        self.log
    }

    /// Handles one request line; `None` means no reply is due.
    pub fn handle_line(&mut self, line: &str) -> Option<Value> {
        let req: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return Some(error_envelope(Value::Null, PARSE_ERROR, format!("parse error: {e}"))),
        };
        let Some(obj) = req.as_object() else {
            return Some(error_envelope(Value::Null, INVALID_REQUEST, "request must be a JSON object".into()));
        };
        let id = obj.get("id").cloned();
        let reply_id = id.clone().unwrap_or(Value::Null);
        if obj.get("jsonrpc").and_then(Value::as_str) != Some("2.0") {
            return Some(error_envelope(reply_id, INVALID_REQUEST, "jsonrpc must be \"2.0\"".into()));
        }
        let Some(method) = obj.get("method").and_then(Value::as_str) else {
            return Some(error_envelope(reply_id, INVALID_REQUEST, "missing method".into()));
        };
        let params = obj.get("params").cloned().unwrap_or(Value::Null);
        let outcome = self.dispatch(method, &params);
        let id = id?;
        Some(match outcome {
            Ok(result) => json!({"jsonrpc": "2.0", "id": id, "result": result}),
            Err(err) => error_envelope(id, err.code, err.message),
        })
    }

    fn dispatch(&mut self, method: &str, params: &Value) -> Result<Value, RpcError> {
        match method {
            "initialize" => Ok(json!({
                "protocolVersion": "2024-11-05",
                "capabilities": {"tools": {}},
                "serverInfo": {"name": "cadgym", "version": env!("CARGO_PKG_VERSION")}
            })),
            "tools/list" => Ok(json!({"tools": self.registry.descriptors()})),
            "tools/call" => self.call(params),
            other => Err(RpcError {
                code: METHOD_NOT_FOUND,
                message: format!("method not found: {other}"),
            }),
        }
    }

    fn call(&mut self, params: &Value) -> Result<Value, RpcError> {
        let invalid = |message: String| RpcError { code: INVALID_PARAMS, message };
        let name = params
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| invalid("params.name must be a string".into()))?;
        let arguments = params.get("arguments").cloned().unwrap_or_else(|| json!({}));
        if !arguments.is_object() {
            return Err(invalid("params.arguments must be an object".into()));
        }
        let call = ToolCall::new(name, arguments);
        let result = self
            .registry
            .invoke(&mut self.document, &call)
            .map_err(|e| match e {
                ToolError::UnknownTool(_) | ToolError::InvalidArguments { .. } => invalid(e.to_string()),
            })?;
        let observation = render_feedback(name, &result, &self.document);
        let text = render_tool_response(&observation);
        let is_error = observation.label == Label::Fail;
        let result = json!({
            "content": [{"type": "text", "text": text}],
            "isError": is_error,
            "label": observation.label,
            "message": observation.message,
            "objects": observation.objects,
        });
        self.log.push(SessionStep { call, observation });
        Ok(result)
    }
}

fn error_envelope(id: Value, code: i64, message: String) -> Value {
    json!({"jsonrpc": "2.0", "id": id, "error": {"code": code, "message": message}})
}

/// Serves requests until the input closes. Blank lines are skipped. A read
/// or write failure ends the session; the call log collected so far is
/// returned either way.
pub fn serve<R: BufRead, W: Write>(input: R, mut output: W, mut session: Session) -> (Vec<SessionStep>, io::Result<()>) {
    let mut status = Ok(());
    for line in input.lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                status = Err(e);
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        if let Some(reply) = session.handle_line(&line) {
            let written = serde_json::to_writer(&mut output, &reply)
                .map_err(io::Error::from)
                .and_then(|_| output.write_all(b"\n"))
                .and_then(|_| output.flush());
            if let Err(e) = written {
                status = Err(e);
                break;
            }
        }
    }
    (session.into_log(), status)
}
