use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};
use tempfile::TempDir;

const CONFIG: &str = r#"
[seeds]
rollout = 3
sampling = 11
simulation = 5

[metrics]
points = 256
resolution = 48
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cadgym"));
    c.env_remove("CADGYM_TASKS_DIR").env_remove("CADGYM_OUTPUT_DIR");
    c
}

fn core_fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(rel)
}

fn setup() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.toml");
    fs::write(&cfg, CONFIG).unwrap();
    (dir, cfg)
}

fn run(cfg: &Path, args: &[&str]) -> Output {
    bin().arg("--config").arg(cfg).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn piped(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn trajectory(path: &Path) -> Value {
    let text = fs::read_to_string(path).unwrap();
    serde_json::from_str(text.lines().next().unwrap()).unwrap()
}

#[test]
fn serve_answers_tools_list_with_golden_bytes() {
    let o = piped(&["serve"], &fs::read(core_fixture("rpc/tools_list_request.jsonl")).unwrap());
    assert!(o.status.success());
    assert_eq!(stdout(&o), fs::read_to_string(core_fixture("rpc/tools_list_response.jsonl")).unwrap());
}

#[test]
fn serve_replays_golden_three_part_session() {
    let (dir, _) = setup();
    let record = dir.path().join("log.jsonl");
    let o = piped(
        &["serve", "--record", record.to_str().unwrap()],
        &fs::read(core_fixture("rpc/session_request.jsonl")).unwrap(),
    );
    assert!(o.status.success());
    assert_eq!(stdout(&o), fs::read_to_string(core_fixture("rpc/session_response.jsonl")).unwrap());
    let log = fs::read_to_string(record).unwrap();
    assert_eq!(log.lines().count(), 11);
}

#[test]
fn serve_survives_malformed_first_line() {
    let o = piped(&["serve"], b"{not json\n{\"jsonrpc\":\"2.0\",\"id\":2,\"method\":\"tools/list\"}\n");
    assert!(o.status.success());
    let replies: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(replies.len(), 2);
    assert_eq!(replies[0]["error"]["code"], json!(-32700));
    assert_eq!(replies[1]["id"], json!(2));
    assert_eq!(replies[1]["result"]["tools"].as_array().unwrap().len(), 6);
}

#[test]
fn rollout_bundled_level_one_succeeds() {
    let (dir, cfg) = setup();
    let out = dir.path().join("t.jsonl");
    let o = run(&cfg, &["rollout", "--task", "l1_washer_plate", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = trajectory(&out);
    assert_eq!(rec["outcome"], json!("success"));
    assert_eq!(rec["reward"]["total"], json!(2.0));
    assert_eq!(rec["seed"], json!(3));
}

#[test]
fn rollout_drop_step_is_rejected() {
    let (dir, cfg) = setup();
    let out = dir.path().join("t.jsonl");
    let o = run(&cfg, &["rollout", "--task", "l2_bored_block", "--corrupt", "drop-step", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let rec = trajectory(&out);
    assert_eq!(rec["outcome"], json!("fail"));
    assert_eq!(rec["reward"]["orm"], json!(0));
}

#[test]
fn rollout_is_byte_deterministic_and_replayable() {
    let (dir, cfg) = setup();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let task = core_fixture("tasks/l3_flanged_tube.json");
    for p in [&a, &b] {
        let o = run(&cfg, &["rollout", "--task", task.to_str().unwrap(), "--corrupt", "swap-boolean", "--seed", "9", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.jsonl");
    let o = run(
        &cfg,
        &["rollout", "--task", task.to_str().unwrap(), "--policy", "replay", "--recorded", a.to_str().unwrap(), "--seed", "9", "--out", c.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (ra, rc) = (trajectory(&a), trajectory(&c));
    assert_eq!(ra["turns"], rc["turns"]);
    assert_eq!(ra["reward"], rc["reward"]);
    assert_eq!(rc["policy"], json!("replay"));
}

#[test]
fn output_dir_comes_from_environment() {
    let (dir, cfg) = setup();
    let out = dir.path().join("envout");
    let o = bin()
        .arg("--config")
        .arg(&cfg)
        .args(["rollout", "--task", "l1_side_disc"])
        .env("CADGYM_OUTPUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.join("trajectories.jsonl").is_file());
}

fn copy_tasks(dst: &Path, ids: &[&str]) {
    fs::create_dir_all(dst).unwrap();
    for id in ids {
        fs::copy(core_fixture(&format!("tasks/{id}.json")), dst.join(format!("{id}.json"))).unwrap();
    }
}

fn summary(report: &Path) -> Value {
    let text = fs::read_to_string(report).unwrap();
    let last: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    last["summary"].clone()
}

#[test]
fn eval_self_comparison_identities() {
    let (dir, cfg) = setup();
    let refs = dir.path().join("refs");
    copy_tasks(&refs, &["l1_side_disc", "l2_bored_block", "l3_rounded_block"]);
    let rep = dir.path().join("r.jsonl");
    let o = run(&cfg, &["eval", refs.to_str().unwrap(), refs.to_str().unwrap(), "--report", rep.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&rep);
    assert_eq!(s["pairs"], json!(3));
    assert_eq!(s["ir"], json!(0.0));
    assert_eq!(s["cd"], json!(0.0));
    assert_eq!(s["iou"], json!(1.0));
    assert_eq!(s["cov"], json!(1.0));
    assert_eq!(s["jsd"], json!(0.0));
    assert!(stdout(&o).contains("IoU"));
}

fn square(origin: f64) -> Value {
    json!([
        {"name": "freecad-set_coord_system", "arguments": {"name": "CS", "origin": [origin, 0, 0], "rotation": [0, 0, 0]}},
        {"name": "freecad-create_complex_sketch", "arguments": {"sketch_name": "S", "frame": "CS", "elements": [
            {"type": "line", "start": [0, 0], "end": [1, 0]},
            {"type": "line", "start": [1, 0], "end": [1, 1]},
            {"type": "line", "start": [1, 1], "end": [0, 1]},
            {"type": "line", "start": [0, 1], "end": [0, 0]}]}},
        {"name": "freecad-extrude_face", "arguments": {"sketch_name": "S", "depth": 1, "solid_name": "FinalModel"}}
    ])
}

#[test]
fn eval_half_overlap_pair_and_stable_report() {
    let (dir, cfg) = setup();
    let (gen, refs) = (dir.path().join("gen"), dir.path().join("ref"));
    fs::create_dir_all(&gen).unwrap();
    fs::create_dir_all(&refs).unwrap();
    fs::write(refs.join("cube.json"), square(0.0).to_string()).unwrap();
    fs::write(gen.join("cube.json"), square(0.5).to_string()).unwrap();
    fs::write(refs.join("missing.json"), square(2.0).to_string()).unwrap();
    let mut reports = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let rep = dir.path().join(name);
        let o = run(&cfg, &["eval", gen.to_str().unwrap(), refs.to_str().unwrap(), "--report", rep.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        reports.push(fs::read_to_string(rep).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let first: Value = serde_json::from_str(reports[0].lines().next().unwrap()).unwrap();
    assert_eq!(first["id"], json!("cube"));
    assert!((first["iou"].as_f64().unwrap() - 1.0 / 3.0).abs() <= 0.02);
    let second: Value = serde_json::from_str(reports[0].lines().nth(1).unwrap()).unwrap();
    assert_eq!(second["outcome"], json!("not_completed"));
    assert_eq!(summary(&dir.path().join("a.jsonl"))["ir"], json!(0.5));
}

fn sim(cfg: &Path, dir: &Path, args: &[&str]) -> (Output, Value) {
    let out = dir.join("trace.json");
    let mut all = vec!["train-sim", "--out", out.to_str().unwrap()];
    all.extend_from_slice(args);
    let o = run(cfg, &all);
    let trace = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    (o, trace)
}

#[test]
fn train_sim_matches_closed_form_and_orders_alpha() {
    let (dir, cfg) = setup();
    let (o, t) = sim(&cfg, dir.path(), &[]);
    assert!(o.status.success());
    assert_eq!(t["status"], json!("finished"));
    assert_eq!(t["total_steps"], json!(45));
    let levels: Vec<u64> = t["steps"].as_array().unwrap().iter().map(|s| s["level"].as_u64().unwrap()).collect();
    assert!(levels.windows(2).all(|w| w[0] <= w[1]));
    let (_, fast) = sim(&cfg, dir.path(), &["--alpha", "0.9"]);
    let (_, slow) = sim(&cfg, dir.path(), &["--alpha", "0.5"]);
    for (f, s) in fast["levels"].as_array().unwrap().iter().zip(slow["levels"].as_array().unwrap()) {
        assert!(f["steps"].as_u64() < s["steps"].as_u64());
    }
}

#[test]
fn train_sim_constant_policy_stalls() {
    let (dir, cfg) = setup();
    let (o, t) = sim(&cfg, dir.path(), &["--policy", "constant", "--max-iter", "40"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(t["status"], json!("stalled"));
    assert!(stdout(&o).contains("Stalled"));
}

#[test]
fn fmt_check_verdicts() {
    let check = |name: &str| bin().arg("fmt-check").arg(core_fixture(&format!("transcripts/{name}.txt"))).output().unwrap();
    assert!(check("pass_multi_turn").status.success());
    let shuffled = check("fail_shuffled_order");
    assert_eq!(shuffled.status.code(), Some(1));
    assert!(stdout(&shuffled).starts_with("invalid"));
    assert_eq!(check("fail_missing_think").status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let (_dir, cfg) = setup();
    assert_eq!(bin().args(["rollout", "--task", "l1_side_disc"]).output().unwrap().status.code(), Some(2));
    assert_eq!(run(&cfg, &["rollout", "--task", "no_such_task"]).status.code(), Some(2));
    assert_eq!(run(&cfg, &["rollout", "--task", "l1_side_disc", "--policy", "oracle"]).status.code(), Some(2));
    assert_eq!(run(&cfg, &["rollout", "--task", "l1_side_disc", "--corrupt", "melt"]).status.code(), Some(2));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["fmt-check", "/nonexistent"]).output().unwrap().status.code(), Some(2));
    let bad = cfg.with_file_name("bad.toml");
    fs::write(&bad, "[seeds]\nrollout = 1\nsampling = 1\nsimulation = 1\nbogus = 2\n").unwrap();
    assert_eq!(run(&bad, &["train-sim"]).status.code(), Some(2));
    fs::write(&bad, "[reward]\nalpha = 1.0\n").unwrap();
    assert_eq!(run(&bad, &["train-sim"]).status.code(), Some(2));
}

#[test]
fn shipped_config_parses() {
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let dir = TempDir::new().unwrap();
    let o = run(&shipped, &["train-sim", "--levels", "2", "--out", dir.path().join("t.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
