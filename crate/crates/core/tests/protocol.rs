use std::path::PathBuf;

use cadgym_core::feedback::Label;
use cadgym_core::geometry::KernelConfig;
use cadgym_core::gym::bundled_tasks;
use cadgym_core::protocol::{check_transcript, parse_tool_response, serve, Session, ToolRegistry};
use serde_json::{json, Value};

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

#[test]
fn transcript_fixtures_match_their_names() {
    let mut names: Vec<_> = std::fs::read_dir(fixture("transcripts")).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    assert!(names.len() >= 12);
    for path in names {
        let name = path.file_stem().unwrap().to_string_lossy().to_string();
        let verdict = check_transcript(&std::fs::read_to_string(&path).unwrap());
        if name.starts_with("pass_") {
            assert!(verdict.ok, "{name}: {:?}", verdict.violations);
        } else {
            assert!(name.starts_with("fail_"), "{name}");
            assert!(!verdict.ok, "{name} accepted");
        }
    }
}

#[test]
fn golden_tools_list_over_serve() {
    let request = std::fs::read(fixture("rpc/tools_list_request.jsonl")).unwrap();
    let golden = std::fs::read_to_string(fixture("rpc/tools_list_response.jsonl")).unwrap();
    let mut out = Vec::new();
    let (log, status) = serve(&request[..], &mut out, Session::new(ToolRegistry::standard(), KernelConfig::default()));
    status.unwrap();
    assert!(log.is_empty());
    assert_eq!(String::from_utf8(out).unwrap(), golden);
}

#[test]
fn bundled_program_builds_over_rpc() {
    let task = bundled_tasks().into_iter().find(|t| t.id == "l2_bored_block").unwrap();
    let mut script = String::from("{\"jsonrpc\":\"2.0\",\"id\":0,\"method\":\"initialize\"}\n\n");
    for (i, call) in task.ground_truth_program.iter().enumerate() {
        let req = json!({"jsonrpc": "2.0", "id": i + 1, "method": "tools/call", "params": {"name": call.name, "arguments": call.arguments}});
        script.push_str(&serde_json::to_string(&req).unwrap());
        script.push('\n');
    }
    let mut out = Vec::new();
    let (log, status) = serve(script.as_bytes(), &mut out, Session::new(ToolRegistry::standard(), KernelConfig::default()));
    status.unwrap();
    assert_eq!(log.len(), task.ground_truth_program.len());
    let replies: Vec<Value> = String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(replies.len(), task.ground_truth_program.len() + 1);
    for (i, reply) in replies.iter().enumerate().skip(1) {
        assert_eq!(reply["id"], json!(i));
        assert_eq!(reply["result"]["isError"], json!(false));
        let text = reply["result"]["content"][0]["text"].as_str().unwrap();
        let obs = parse_tool_response(text).unwrap();
        assert_eq!(obs.label, Label::Success);
        assert_eq!(obs, log[i - 1].observation);
    }
    let last = &log.last().unwrap().observation;
    assert!(last.objects.iter().any(|o| o.name == "FinalModel"));
}

#[test]
fn kernel_failure_is_reported_in_band() {
    let mut s = Session::new(ToolRegistry::standard(), KernelConfig::default());
    let req = json!({"jsonrpc": "2.0", "id": 7, "method": "tools/call",
        "params": {"name": "freecad-extrude_face", "arguments": {"sketch_name": "Nope", "depth": 1.0, "solid_name": "X"}}});
    let reply = s.handle_line(&req.to_string()).unwrap();
    assert!(reply.get("error").is_none());
    assert_eq!(reply["result"]["isError"], json!(true));
    assert_eq!(reply["result"]["label"], json!("fail"));
}
