use std::sync::Arc;

use cadgym_core::feedback::Label;
use cadgym_core::geometry::KernelConfig;
use cadgym_core::gym::*;
use cadgym_core::metrics::iou;
use cadgym_core::protocol::{check_transcript, ToolCall, ToolRegistry};
use cadgym_core::reward::{ReferenceJudge, RewardWeights};
use serde_json::json;

fn rollout(task: &Task, spec: &CorruptionSpec, seed: u64) -> (TrajectoryRecord, Vec<AppliedCorruption>) {
    let mut policy = ScriptedPolicy::new(task, spec, seed);
    let applied = policy.applied().to_vec();
    let rec = run_episode(
        Arc::new(task.clone()),
        &mut policy,
        &EpisodeConfig::default(),
        &ReferenceJudge::default(),
        RewardWeights::default(),
        seed,
    )
    .unwrap();
    (rec, applied)
}

#[test]
fn bundled_suite_is_valid_and_stratified() {
    let tasks = bundled_tasks();
    assert!(tasks.len() >= 10);
    for level in 1..=5 {
        assert!(tasks.iter().filter(|t| t.level == level).count() >= 2);
    }
    for t in &tasks {
        t.validate(&KernelConfig::default()).unwrap_or_else(|e| panic!("{}: {e}", t.id));
        let out = replay(&t.ground_truth_program, &KernelConfig::default()).unwrap();
        assert_eq!(out.final_name, FINAL_MODEL, "{}", t.id);
    }
}

#[test]
fn uncorrupted_rollouts_succeed() {
    for t in bundled_tasks() {
        let (rec, _) = rollout(&t, &CorruptionSpec::none(), 0);
        assert_eq!(rec.outcome, Outcome::Success, "{}", t.id);
        assert_eq!(rec.reward.orm, 1);
        assert_eq!(rec.reward.format, 1, "{}", t.id);
        assert!(rec.step_rewards().iter().all(|r| *r == 1));
        assert_eq!(rec.reward.total, 2.0);
        assert!(rec.final_iou.unwrap() >= 0.99);
        assert_eq!(rec.recompute_reward(), rec.reward);
        assert!(check_transcript(&rec.transcript()).ok);
    }
}

#[test]
fn every_single_corruption_is_rejected() {
    for t in bundled_tasks() {
        for kind in [CorruptionKind::DropStep, CorruptionKind::SwapBoolean] {
            for seed in 0..6 {
                let spec = CorruptionSpec { kinds: vec![kind], rate: 0.01 };
                let (rec, applied) = rollout(&t, &spec, seed);
                if applied.is_empty() {
                    continue;
                }
                assert_eq!(rec.reward.orm, 0, "{} {:?} seed {seed} iou {:?}", t.id, kind, rec.final_iou);
                assert_eq!(rec.outcome, Outcome::Fail);
            }
        }
    }
}

#[test]
fn swap_boolean_lowers_iou() {
    let t = bundled_task("l2_angle_bracket").unwrap();
    let spec = CorruptionSpec { kinds: vec![CorruptionKind::SwapBoolean], rate: 1.0 };
    let (swapped, _) = corrupt_program(&t.ground_truth_program, &spec, 0);
    let gt = replay(&t.ground_truth_program, &KernelConfig::default()).unwrap().final_solid;
    let bad = replay(&swapped, &KernelConfig::default()).unwrap().final_solid;
    assert!(iou(&bad, &gt, 64).unwrap() < iou(&gt, &gt, 64).unwrap());
}

#[test]
fn malformed_json_is_a_failed_step_not_a_crash() {
    let t = Arc::new(bundled_task("l1_washer_plate").unwrap());
    let mut st = EpisodeState::reset(t, EpisodeConfig::default(), Arc::new(ToolRegistry::standard()));
    assert_eq!(st.turn(), 0);
    assert!(!st.is_done());
    let r = st.step("<think>x</think>\n<tool_call>\n{not json\n</tool_call>").unwrap();
    assert_eq!(r.observations[0].label, Label::Fail);
    assert_eq!(r.step_rewards, vec![0]);
    assert!(!r.done);
    let r = st.step("<answer>COMPLETED</answer>").unwrap();
    assert!(r.done);
    assert!(matches!(st.step("<answer>COMPLETED</answer>"), Err(GymError::EpisodeDone)));
}

#[test]
fn failure_streak_and_turn_limit_terminate() {
    let t = Arc::new(bundled_task("l1_washer_plate").unwrap());
    let mut st = EpisodeState::reset(t.clone(), EpisodeConfig::default(), Arc::new(ToolRegistry::standard()));
    let mut n = 0;
    while !st.is_done() {
        st.step("garbage").unwrap();
        n += 1;
    }
    assert_eq!(n, 5);
    assert_eq!(st.termination(), Some(Termination::FailureLimit));

    let cfg = EpisodeConfig { max_turns: 3, ..Default::default() };
    let mut st = EpisodeState::reset(t, cfg, Arc::new(ToolRegistry::standard()));
    while !st.is_done() {
        st.step("<think>still planning</think>").unwrap();
    }
    assert_eq!(st.turn(), 3);
    assert_eq!(st.termination(), Some(Termination::TurnLimit));
    let rec = st.finalize(&ReferenceJudge::default(), RewardWeights::default()).unwrap();
    assert_eq!(rec.outcome, Outcome::Fail);
}

#[test]
fn resets_are_independent() {
    let t = Arc::new(bundled_task("l2_bored_block").unwrap());
    let reg = Arc::new(ToolRegistry::standard());
    let mut a = EpisodeState::reset(t.clone(), EpisodeConfig::default(), reg.clone());
    let b = EpisodeState::reset(t, EpisodeConfig::default(), reg);
    a.step(&scripted_turns(&a.task().ground_truth_program.clone())[0]).unwrap();
    assert!(!a.document().is_empty());
    assert!(b.document().is_empty());
    assert_eq!(b.turn(), 0);
}

#[test]
fn rollouts_are_byte_deterministic() {
    let t = bundled_task("l3_flanged_tube").unwrap();
    let spec = CorruptionSpec { kinds: vec![CorruptionKind::SwapBoolean], rate: 0.5 };
    let a = save_trajectory(&rollout(&t, &spec, 7).0);
    let b = save_trajectory(&rollout(&t, &spec, 7).0);
    assert_eq!(a, b);
    let a = replay(&t.ground_truth_program, &KernelConfig::default()).unwrap();
    let b = replay(&t.ground_truth_program, &KernelConfig::default()).unwrap();
    assert_eq!(a.document.summaries(), b.document.summaries());
    assert_eq!(iou(&a.final_solid, &b.final_solid, 32).unwrap(), 1.0);
}

#[test]
fn store_round_trip_and_errors() {
    let recs: Vec<_> = bundled_tasks().iter().map(|t| rollout(t, &CorruptionSpec::none(), 1).0).collect();
    let text = save_trajectories(&recs);
    assert_eq!(load_trajectories(&text).unwrap(), recs);

    let many: Vec<_> = (0..200).map(|i| {
        let mut r = recs[i % recs.len()].clone();
        r.seed = i as u64;
        r
    }).collect();
    let loaded = load_trajectories(&save_trajectories(&many)).unwrap();
    assert_eq!(loaded.iter().map(|r| r.seed).collect::<Vec<_>>(), (0..200).collect::<Vec<_>>());

    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let l = lines[2].len();
    lines[2].truncate(l / 2);
    match load_trajectories(&lines.join("\n")) {
        Err(GymError::Store { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected store error, got {other:?}"),
    }
    let bumped = save_trajectory(&recs[0]).replacen("\"schema_version\":1", "\"schema_version\":9", 1);
    assert!(matches!(load_trajectory(&bumped), Err(GymError::Store { .. })));
}

#[test]
fn replay_aborts_at_bad_reference() {
    let prog = vec![
        ToolCall::new("freecad-set_coord_system", json!({"name": "CS1", "origin": [0, 0, 0], "rotation": [0, 0, 0]})),
        ToolCall::new("freecad-extrude_face", json!({"sketch_name": "Missing", "depth": 1.0, "solid_name": "S"})),
    ];
    match replay(&prog, &KernelConfig::default()) {
        Err(GymError::Replay { index, .. }) => assert_eq!(index, 1),
        _ => panic!("expected abort"),
    }
}

#[test]
fn replay_policy_reproduces_record() {
    let t = bundled_task("l4_bench").unwrap();
    let (rec, _) = rollout(&t, &CorruptionSpec::none(), 3);
    let reg = PolicyRegistry::standard();
    let ctx = PolicyContext { task: &t, seed: 3, corruption: &CorruptionSpec::none(), recorded: Some(&rec) };
    let mut p = reg.build("replay", &ctx).unwrap();
    let again = run_episode(Arc::new(t.clone()), p.as_mut(), &EpisodeConfig::default(), &ReferenceJudge::default(), RewardWeights::default(), 3).unwrap();
    assert_eq!(again.turns, rec.turns);
    assert_eq!(again.reward, rec.reward);
    assert!(reg.build("nope", &ctx).is_err());
}

