//! Agent-facing protocol: the tool library, the tag grammar of agent output
//! and transcripts, and the JSON-RPC stdio server.

pub mod rpc;
pub mod tags;
pub mod tools;

pub use rpc::{serve, Session, SessionStep};
pub use tags::{
    check_transcript, parse_agent_bytes, parse_transcript, render_transcript, TranscriptTurn, parse_agent_output, parse_agent_output_with, parse_tool_response,
    render_tool_response, scan_tags, segments, validate_format, AgentTurn, FormatVerdict, FormatViolation,
    ParseError, Segment, Tag, TagEvent, COMPLETED,
};
pub use tools::{Tool, ToolCall, ToolDescriptor, ToolError, ToolRegistry, LIBRARY};

/// Observations travel over the wire unchanged.
pub type ToolResponse = crate::feedback::Observation;
