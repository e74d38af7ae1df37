use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::protocol::tools::{BOOLEAN_OPERATION, EXTRUDE_FACE};
use crate::protocol::ToolCall;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionKind {
    /// Removes an extrusion, so a part goes missing.
    DropStep,
    /// Scales an extrusion depth by 1.5.
    PerturbParameter,
    /// Replaces a boolean operation: fuse and common become cut, cut becomes fuse.
    SwapBoolean,
}

impl CorruptionKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "drop-step" => Some(Self::DropStep),
            "perturb-parameter" => Some(Self::PerturbParameter),
            "swap-boolean" => Some(Self::SwapBoolean),
            _ => None,
        }
    }

    fn eligible(self, call: &ToolCall) -> bool {
        match self {
            Self::DropStep | Self::PerturbParameter => call.name == EXTRUDE_FACE,
            Self::SwapBoolean => call.name == BOOLEAN_OPERATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionSpec {
    pub kinds: Vec<CorruptionKind>,
    pub rate: f64,
}

impl CorruptionSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_active(&self) -> bool {
        self.rate > 0.0 && !self.kinds.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedCorruption {
    pub kind: CorruptionKind,
    /// Index into the original program.
    pub index: usize,
}

fn swap_operation(call: &mut ToolCall) -> bool {
    let Some(op) = call.arguments.get("operation").and_then(Value::as_str) else {
        return false;
    };
    let swapped = match op {
        "cut" => "fuse",
        "fuse" | "common" => "cut",
        _ => return false,
    };
    call.arguments["operation"] = Value::from(swapped);
    true
}

fn scale_depth(call: &mut ToolCall) -> bool {
    match call.arguments.get("depth").and_then(Value::as_f64) {
        Some(d) => {
            call.arguments["depth"] = Value::from(d * 1.5);
            true
        }
        None => false,
    }
}

/// For each kind, corrupts `max(1, round(rate * eligible))` eligible steps
/// chosen by `seed`. Kinds with no eligible step are skipped.
pub fn corrupt_program(program: &[ToolCall], spec: &CorruptionSpec, seed: u64) -> (Vec<ToolCall>, Vec<AppliedCorruption>) {
    let mut calls: Vec<Option<ToolCall>> = program.iter().cloned().map(Some).collect();
    let mut applied = Vec::new();
    if !spec.is_active() {
        return (program.to_vec(), applied);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &kind in &spec.kinds {
        let mut eligible: Vec<usize> = calls
            .iter()
            .enumerate()
            .filter(|(_, c)| c.as_ref().is_some_and(|c| kind.eligible(c)))
            .map(|(i, _)| i)
            .collect();
        if eligible.is_empty() {
            continue;
        }
        let n = ((spec.rate * eligible.len() as f64).round() as usize).clamp(1, eligible.len());
        eligible.shuffle(&mut rng);
        let mut chosen: Vec<usize> = eligible.into_iter().take(n).collect();
        chosen.sort_unstable();
        for i in chosen {
            let ok = match kind {
                CorruptionKind::DropStep => {
                    calls[i] = None;
                    true
                }
                CorruptionKind::PerturbParameter => scale_depth(calls[i].as_mut().expect("eligible")),
                CorruptionKind::SwapBoolean => swap_operation(calls[i].as_mut().expect("eligible")),
            };
            if ok {
                applied.push(AppliedCorruption { kind, index: i });
            }
        }
    }
    (calls.into_iter().flatten().collect(), applied)
}
