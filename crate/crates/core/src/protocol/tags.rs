//! Tag grammar for agent output and transcripts:
//! `<think>`, `<tool_call>`, `<tool_response>` and `<answer>`, each with a
//! matching closer, never nested. Text outside tags carries no meaning.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use thiserror::Error;

use super::tools::ToolCall;
use crate::feedback::Observation;

pub const COMPLETED: &str = "COMPLETED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Think,
    ToolCall,
    ToolResponse,
    Answer,
}

impl Tag {
    pub const ALL: [Tag; 4] = [Tag::Think, Tag::ToolCall, Tag::ToolResponse, Tag::Answer];

    pub fn name(self) -> &'static str {
        match self {
            Tag::Think => "think",
            Tag::ToolCall => "tool_call",
            Tag::ToolResponse => "tool_response",
            Tag::Answer => "answer",
        }
    }

    pub fn open(self) -> &'static str {
        match self {
            Tag::Think => "<think>",
            Tag::ToolCall => "<tool_call>",
            Tag::ToolResponse => "<tool_response>",
            Tag::Answer => "<answer>",
        }
    }

    pub fn close(self) -> &'static str {
        match self {
            Tag::Think => "</think>",
            Tag::ToolCall => "</tool_call>",
            Tag::ToolResponse => "</tool_response>",
            Tag::Answer => "</answer>",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.open())
    }
}

/// One recognised tag occurrence; offsets are byte positions in the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TagEvent {
    pub tag: Tag,
    pub closing: bool,
    pub start: usize,
    pub end: usize,
}

/// Finds every tag occurrence, in order. Never fails; unknown `<...>` text
/// is left alone.
pub fn scan_tags(text: &str) -> Vec<TagEvent> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while let Some(off) = text[i..].find('<') {
        let at = i + off;
        let rest = &text[at..];
        let mut matched = None;
        for tag in Tag::ALL {
            if rest.starts_with(tag.open()) {
                matched = Some((tag, false, tag.open().len()));
                break;
            }
            if rest.starts_with(tag.close()) {
                matched = Some((tag, true, tag.close().len()));
                break;
            }
        }
        match matched {
            Some((tag, closing, len)) => {
                out.push(TagEvent {
                    tag,
                    closing,
                    start: at,
                    end: at + len,
                });
                i = at + len;
            }
            None => i = at + 1,
        }
        debug_assert!(i <= bytes.len());
    }
    out
}

/// A complete `<tag>body</tag>` block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment<'a> {
    pub tag: Tag,
    pub body: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unbalanced tags: {0}")]
    UnbalancedTags(String),
    #[error("tool call {index} is not a valid JSON tool-call object: {detail}")]
    MalformedToolJson { index: usize, detail: String },
    #[error("unknown tool {0}")]
    UnknownTool(String),
    #[error("a turn cannot contain both an answer and tool calls")]
    ExclusiveViolation,
    #[error("no <think>, <tool_call> or <answer> block found")]
    NoContent,
    #[error("tool response is not valid: {0}")]
    MalformedResponse(String),
}

/// Splits text into tagged blocks, rejecting nesting, stray closers and
/// unclosed openers.
pub fn segments(text: &str) -> Result<Vec<Segment<'_>>, ParseError> {
    let mut out = Vec::new();
    let mut open: Option<TagEvent> = None;
    for ev in scan_tags(text) {
        match (open, ev.closing) {
            (None, false) => open = Some(ev),
            (None, true) => {
                return Err(ParseError::UnbalancedTags(format!(
                    "{} at byte {} has no opening tag",
                    ev.tag.close(),
                    ev.start
                )))
            }
            (Some(o), false) => {
                return Err(ParseError::UnbalancedTags(format!(
                    "{} at byte {} opened inside {}",
                    ev.tag.open(),
                    ev.start,
                    o.tag.open()
                )))
            }
            (Some(o), true) if o.tag == ev.tag => {
                out.push(Segment {
                    tag: o.tag,
                    body: &text[o.end..ev.start],
                });
                open = None;
            }
            (Some(o), true) => {
                return Err(ParseError::UnbalancedTags(format!(
                    "{} at byte {} closes {}",
                    ev.tag.close(),
                    ev.start,
                    o.tag.open()
                )))
            }
        }
    }
    if let Some(o) = open {
        return Err(ParseError::UnbalancedTags(format!(
            "{} at byte {} is never closed",
            o.tag.open(),
            o.start
        )));
    }
    Ok(out)
}

/// One parsed agent message.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentTurn {
    pub think: Option<String>,
    pub tool_calls: Vec<ToolCall>,
    pub answer: Option<String>,
}

impl AgentTurn {
    pub fn is_completed(&self) -> bool {
        self.answer.as_deref() == Some(COMPLETED)
    }

    /// Canonical text form; `parse_agent_output` inverts it.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(t) = &self.think {
            s.push_str(Tag::Think.open());
            s.push_str(t);
            s.push_str(Tag::Think.close());
            s.push('\n');
        }
        for call in &self.tool_calls {
            s.push_str(Tag::ToolCall.open());
            s.push('\n');
            s.push_str(&serde_json::to_string(call).expect("tool call serializes"));
            s.push('\n');
            s.push_str(Tag::ToolCall.close());
            s.push('\n');
        }
        if let Some(a) = &self.answer {
            s.push_str(Tag::Answer.open());
            s.push_str(a);
            s.push_str(Tag::Answer.close());
            s.push('\n');
        }
        s
    }
}

fn decode_call(index: usize, body: &str) -> Result<ToolCall, ParseError> {
    let malformed = |detail: String| ParseError::MalformedToolJson { index, detail };
    let v: Value = serde_json::from_str(body.trim()).map_err(|e| malformed(e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| malformed("expected a JSON object".into()))?;
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("missing string field \"name\"".into()))?;
    let arguments = obj
        .get("arguments")
        .ok_or_else(|| malformed("missing field \"arguments\"".into()))?;
    if !arguments.is_object() {
        return Err(malformed("\"arguments\" must be an object".into()));
    }
    Ok(ToolCall::new(name, arguments.clone()))
}

/// Parses raw agent text against the given tool names. Multiple `<think>`
/// blocks are joined by newlines; `<tool_response>` blocks written by the
/// agent are ignored since responses come from the environment.
pub fn parse_agent_output_with<'n>(
    text: &str,
    known_tools: impl IntoIterator<Item = &'n str> + Clone,
) -> Result<AgentTurn, ParseError> {
    let mut turn = AgentTurn::default();
    let mut thinks: Vec<&str> = Vec::new();
    for seg in segments(text)? {
        match seg.tag {
            Tag::Think => thinks.push(seg.body),
            Tag::ToolCall => {
                let call = decode_call(turn.tool_calls.len(), seg.body)?;
                if !known_tools.clone().into_iter().any(|n| n == call.name) {
                    return Err(ParseError::UnknownTool(call.name));
                }
                turn.tool_calls.push(call);
            }
            Tag::Answer => {
                if turn.answer.is_none() {
                    turn.answer = Some(seg.body.trim().to_string());
                }
            }
            Tag::ToolResponse => {}
        }
    }
    if !thinks.is_empty() {
        turn.think = Some(thinks.join("\n"));
    }
    if turn.answer.is_some() && !turn.tool_calls.is_empty() {
        return Err(ParseError::ExclusiveViolation);
    }
    if turn.think.is_none() && turn.tool_calls.is_empty() && turn.answer.is_none() {
        return Err(ParseError::NoContent);
    }
    Ok(turn)
}

pub fn parse_agent_output(text: &str) -> Result<AgentTurn, ParseError> {
    parse_agent_output_with(text, super::tools::LIBRARY)
}

/// Lossy UTF-8 entry point for arbitrary byte input.
pub fn parse_agent_bytes(bytes: &[u8]) -> Result<AgentTurn, ParseError> {
    parse_agent_output(&String::from_utf8_lossy(bytes))
}

/// Environment feedback block. `<` and `>` inside the JSON payload are
/// escaped so the block cannot be confused with tag text.
pub fn render_tool_response(resp: &Observation) -> String {
    let json = serde_json::to_string(resp)
        .expect("observation serializes")
        .replace('<', "\\u003c")
        .replace('>', "\\u003e");
    format!("{}\n{json}\n{}", Tag::ToolResponse.open(), Tag::ToolResponse.close())
}

pub fn parse_tool_response(text: &str) -> Result<Observation, ParseError> {
    let segs = segments(text)?;
    let seg = segs
        .iter()
        .find(|s| s.tag == Tag::ToolResponse)
        .ok_or_else(|| ParseError::MalformedResponse("no <tool_response> block".into()))?;
    serde_json::from_str(seg.body.trim()).map_err(|e| ParseError::MalformedResponse(e.to_string()))
}

/// One agent message of a transcript with the environment responses that
/// followed it.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptTurn {
    pub agent: AgentTurn,
    pub responses: Vec<Observation>,
}

impl TranscriptTurn {
    pub fn to_text(&self) -> String {
        let mut s = self.agent.to_text();
        for r in &self.responses {
            s.push_str(&render_tool_response(r));
            s.push('\n');
        }
        s
    }
}

/// Splits a transcript into turns. A new turn starts at a `<think>` or
/// `<tool_call>` that follows a response or an answer.
pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptTurn>, ParseError> {
    let mut turns: Vec<TranscriptTurn> = Vec::new();
    let mut thinks: Vec<String> = Vec::new();
    let mut prev: Option<Tag> = None;
    let flush_think = |turns: &mut Vec<TranscriptTurn>, thinks: &mut Vec<String>| {
        if let Some(t) = turns.last_mut() {
            if !thinks.is_empty() {
                t.agent.think = Some(thinks.join("\n"));
            }
        }
        thinks.clear();
    };
    for seg in segments(text)? {
        let starts_turn = match seg.tag {
            Tag::Think | Tag::ToolCall => matches!(prev, None | Some(Tag::ToolResponse) | Some(Tag::Answer)),
            Tag::ToolResponse | Tag::Answer => prev.is_none(),
        };
        if starts_turn {
            flush_think(&mut turns, &mut thinks);
            turns.push(TranscriptTurn {
                agent: AgentTurn::default(),
                responses: Vec::new(),
            });
        }
        let turn = turns.last_mut().expect("turn started");
        match seg.tag {
            Tag::Think => thinks.push(seg.body.to_string()),
            Tag::ToolCall => {
                let call = decode_call(turn.agent.tool_calls.len(), seg.body)?;
                turn.agent.tool_calls.push(call);
            }
            Tag::ToolResponse => {
                let obs = serde_json::from_str(seg.body.trim()).map_err(|e| ParseError::MalformedResponse(e.to_string()))?;
                turn.responses.push(obs);
            }
            Tag::Answer => turn.agent.answer = Some(seg.body.trim().to_string()),
        }
        prev = Some(seg.tag);
    }
    flush_think(&mut turns, &mut thinks);
    Ok(turns)
}

pub fn render_transcript(turns: &[TranscriptTurn]) -> String {
    turns.iter().map(TranscriptTurn::to_text).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FormatViolation {
    MissingTag { tag: Tag },
    Unbalanced { detail: String },
    Order { detail: String },
}

impl FormatViolation {
    pub fn kind(&self) -> &'static str {
        match self {
            FormatViolation::MissingTag { .. } => "missing tag",
            FormatViolation::Unbalanced { .. } => "unbalanced",
            FormatViolation::Order { .. } => "order",
        }
    }
}

impl fmt::Display for FormatViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatViolation::MissingTag { tag } => write!(f, "missing tag: no {tag} block"),
            FormatViolation::Unbalanced { detail } => write!(f, "unbalanced: {detail}"),
            FormatViolation::Order { detail } => write!(f, "order: {detail}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatVerdict {
    pub ok: bool,
    pub violations: Vec<FormatViolation>,
}

/// Checks the tag stream of a whole transcript:
/// every required tag is present, openers and closers pair up without
/// nesting, and each tool call is preceded by a think in its turn and
/// answered by a tool response before the next turn starts. An answer, if
/// present, must be the final block.
pub fn validate_format(events: &[TagEvent]) -> FormatVerdict {
    let mut violations = Vec::new();
    let mut blocks: Vec<Tag> = Vec::new();
    let mut open: Option<TagEvent> = None;
    for ev in events {
        match (open, ev.closing) {
            (None, false) => open = Some(*ev),
            (None, true) => violations.push(FormatViolation::Unbalanced {
                detail: format!("{} at byte {} has no opening tag", ev.tag.close(), ev.start),
            }),
            (Some(o), false) => {
                violations.push(FormatViolation::Unbalanced {
                    detail: format!("{} at byte {} opened inside {}", ev.tag.open(), ev.start, o.tag.open()),
                });
                open = Some(*ev);
            }
            (Some(o), true) if o.tag == ev.tag => {
                blocks.push(o.tag);
                open = None;
            }
            (Some(o), true) => {
                violations.push(FormatViolation::Unbalanced {
                    detail: format!("{} at byte {} closes {}", ev.tag.close(), ev.start, o.tag.open()),
                });
                open = None;
            }
        }
    }
    if let Some(o) = open {
        violations.push(FormatViolation::Unbalanced {
            detail: format!("{} at byte {} is never closed", o.tag.open(), o.start),
        });
    }

    for tag in [Tag::Think, Tag::ToolCall, Tag::ToolResponse] {
        if !blocks.contains(&tag) {
            violations.push(FormatViolation::MissingTag { tag });
        }
    }

    let mut order = |detail: String| violations.push(FormatViolation::Order { detail });
    let mut pending = 0usize;
    let mut turn_has_think = false;
    let mut responding = false;
    let mut answered = false;
    for (i, tag) in blocks.iter().enumerate() {
        if answered {
            order(format!("block {i} ({tag}) follows the final answer"));
            break;
        }
        match tag {
            Tag::Think => {
                if pending > 0 {
                    order(format!("block {i}: <think> before all tool calls were answered"));
                }
                if responding {
                    responding = false;
                }
                turn_has_think = true;
            }
            Tag::ToolCall => {
                if responding {
                    responding = false;
                    turn_has_think = false;
                }
                if !turn_has_think {
                    order(format!("block {i}: <tool_call> without a preceding <think> in its turn"));
                }
                pending += 1;
            }
            Tag::ToolResponse => {
                if pending == 0 {
                    order(format!("block {i}: <tool_response> before its <tool_call>"));
                } else {
                    pending -= 1;
                }
                responding = true;
                if pending == 0 {
                    turn_has_think = false;
                }
            }
            Tag::Answer => {
                if pending > 0 {
                    order(format!("block {i}: <answer> while tool calls are unanswered"));
                }
                answered = true;
            }
        }
    }
    if pending > 0 {
        order(format!("{pending} tool call(s) never received a <tool_response>"));
    }

    FormatVerdict {
        ok: violations.is_empty(),
        violations,
    }
}

pub fn check_transcript(text: &str) -> FormatVerdict {
    validate_format(&scan_tags(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::Label;
    use serde_json::json;

    #[test]
    fn parses_think_and_call() {
        let text = r#"<think>plan</think><tool_call>{"name":"freecad-extrude_face","arguments":{"sketch_name":"S1","depth":1,"solid_name":"B"}}</tool_call>"#;
        let turn = parse_agent_output(text).unwrap();
        assert_eq!(turn.think.as_deref(), Some("plan"));
        assert_eq!(turn.tool_calls.len(), 1);
        assert_eq!(turn.tool_calls[0].name, "freecad-extrude_face");
        assert!(!turn.is_completed());
    }

    #[test]
    fn parses_terminal_answer() {
        let turn = parse_agent_output("<answer>COMPLETED</answer>").unwrap();
        assert!(turn.is_completed());
        assert!(turn.tool_calls.is_empty());
    }

    #[test]
    fn prose_outside_tags_is_ignored() {
        let turn = parse_agent_output("Sure! <think>a</think> trailing words").unwrap();
        assert_eq!(turn.think.as_deref(), Some("a"));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_agent_output("<tool_call>{not json}</tool_call>"),
            Err(ParseError::MalformedToolJson { index: 0, .. })
        ));
        assert!(matches!(
            parse_agent_output(r#"<tool_call>{"name":"freecad-fillet","arguments":{}}</tool_call>"#),
            Err(ParseError::UnknownTool(_))
        ));
        assert!(matches!(
            parse_agent_output(r#"<tool_call>{"name":"freecad-extrude_face"}</tool_call>"#),
            Err(ParseError::MalformedToolJson { .. })
        ));
        assert!(matches!(
            parse_agent_output("<think>x"),
            Err(ParseError::UnbalancedTags(_))
        ));
        assert!(matches!(
            parse_agent_output("<think><answer>x</answer></think>"),
            Err(ParseError::UnbalancedTags(_))
        ));
        assert!(matches!(parse_agent_output("</think>"), Err(ParseError::UnbalancedTags(_))));
        assert!(matches!(
            parse_agent_output(
                r#"<tool_call>{"name":"freecad-multiple_fuse","arguments":{}}</tool_call><answer>COMPLETED</answer>"#
            ),
            Err(ParseError::ExclusiveViolation)
        ));
        assert!(matches!(parse_agent_output("just words"), Err(ParseError::NoContent)));
    }

    #[test]
    fn tags_are_case_sensitive() {
        assert!(matches!(parse_agent_output("<THINK>x</THINK>"), Err(ParseError::NoContent)));
    }

    fn obs(label: Label, message: &str) -> Observation {
        Observation {
            label,
            message: message.into(),
            objects: vec![],
        }
    }

    #[test]
    fn tool_response_round_trip() {
        let ok = obs(Label::Success, "A new solid U was created by performing the Boolean operation fuse.");
        let text = render_tool_response(&ok);
        assert!(text.starts_with("<tool_response>"));
        assert!(text.contains("success"));
        assert_eq!(parse_tool_response(&text).unwrap(), ok);

        let bad = obs(
            Label::Fail,
            "The Boolean operation cut between base object A and tool object B failed. Error: <x>",
        );
        let text = render_tool_response(&bad);
        assert!(text.contains("failed"));
        assert_eq!(scan_tags(&text).len(), 2);
        assert_eq!(parse_tool_response(&text).unwrap(), bad);
    }

    fn call_block() -> String {
        let call = ToolCall::new("freecad-extrude_face", json!({"sketch_name":"S","depth":1.0,"solid_name":"B"}));
        AgentTurn { think: None, tool_calls: vec![call], answer: None }.to_text()
    }

    fn resp_block() -> String {
        render_tool_response(&obs(Label::Success, "ok"))
    }

    #[test]
    fn canonical_transcript_passes() {
        let mut t = String::new();
        for _ in 0..3 {
            t.push_str("<think>step</think>\n");
            t.push_str(&call_block());
            t.push_str(&resp_block());
            t.push('\n');
        }
        t.push_str("<answer>COMPLETED</answer>");
        let v = check_transcript(&t);
        assert!(v.ok, "{:?}", v.violations);
    }

    #[test]
    fn response_before_call_is_an_order_violation() {
        let t = format!("<think>a</think>{}{}", resp_block(), call_block());
        let v = check_transcript(&t);
        assert!(!v.ok);
        assert!(v.violations.iter().any(|x| x.kind() == "order"));
    }

    #[test]
    fn missing_think_is_reported() {
        let t = format!("{}{}", call_block(), resp_block());
        let v = check_transcript(&t);
        assert!(v.violations.iter().any(|x| x.kind() == "missing tag"));
    }

    #[test]
    fn batched_calls_are_accepted() {
        let t = format!("<think>two</think>{}{}{}{}", call_block(), call_block(), resp_block(), resp_block());
        assert!(check_transcript(&t).ok);
    }
}
