use serde::{Deserialize, Serialize};

use super::replay::replay;
use super::GymError;
use crate::geometry::{voxelize, KernelConfig};
use crate::protocol::tools::EXTRUDE_FACE;
use crate::protocol::ToolCall;

pub const TASK_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub schema_version: u32,
    pub id: String,
    pub instruction: String,
    pub level: usize,
    pub ground_truth_program: Vec<ToolCall>,
}

impl Task {
    pub fn from_json(text: &str) -> Result<Self, GymError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| GymError::InvalidTask(e.to_string()))?;
        if let Some(found) = v.get("schema_version").and_then(serde_json::Value::as_u64) {
            if found != TASK_SCHEMA_VERSION as u64 {
                return Err(GymError::SchemaVersion {
                    expected: TASK_SCHEMA_VERSION,
                    found,
                });
            }
        }
        serde_json::from_value(v).map_err(|e| GymError::InvalidTask(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("task serializes")
    }

    pub fn extrude_count(&self) -> usize {
        self.ground_truth_program.iter().filter(|c| c.name == EXTRUDE_FACE).count()
    }

    /// Structural checks plus a ground-truth replay that must end in a
    /// non-empty final solid.
    pub fn validate(&self, config: &KernelConfig) -> Result<(), GymError> {
        if self.schema_version != TASK_SCHEMA_VERSION {
            return Err(GymError::SchemaVersion {
                expected: TASK_SCHEMA_VERSION,
                found: self.schema_version as u64,
            });
        }
        if self.id.trim().is_empty() {
            return Err(GymError::InvalidTask("task id is empty".into()));
        }
        if self.instruction.trim().is_empty() {
            return Err(GymError::InvalidTask(format!("task {} has an empty instruction", self.id)));
        }
        if self.level == 0 {
            return Err(GymError::InvalidTask(format!("task {} has level 0", self.id)));
        }
        if self.extrude_count() != self.level {
            return Err(GymError::InvalidTask(format!(
                "task {} has level {} but {} extrusions",
                self.id,
                self.level,
                self.extrude_count()
            )));
        }
        let out = replay(&self.ground_truth_program, config)?;
        voxelize(&out.final_solid, config.empty_check_resolution.max(crate::geometry::MIN_RESOLUTION))
            .map_err(|e| GymError::InvalidTask(format!("task {} ground truth is degenerate: {e}", self.id)))?;
        Ok(())
    }
}

const BUNDLED: [&str; 10] = [
    include_str!("../../fixtures/tasks/l1_washer_plate.json"),
    include_str!("../../fixtures/tasks/l1_side_disc.json"),
    include_str!("../../fixtures/tasks/l2_angle_bracket.json"),
    include_str!("../../fixtures/tasks/l2_bored_block.json"),
    include_str!("../../fixtures/tasks/l3_rounded_block.json"),
    include_str!("../../fixtures/tasks/l3_flanged_tube.json"),
    include_str!("../../fixtures/tasks/l4_lightened_gear_blank.json"),
    include_str!("../../fixtures/tasks/l4_bench.json"),
    include_str!("../../fixtures/tasks/l5_gusseted_bracket.json"),
    include_str!("../../fixtures/tasks/l5_stepped_tower.json"),
];

/// The shipped task suite, two tasks per level 1 through 5.
pub fn bundled_tasks() -> Vec<Task> {
    BUNDLED
        .iter()
        .map(|t| Task::from_json(t).expect("bundled task parses"))
        .collect()
}

pub fn bundled_task(id: &str) -> Option<Task> {
    bundled_tasks().into_iter().find(|t| t.id == id)
}

/// Loads every `*.json` task in a directory, sorted by file name.
pub fn load_task_dir(dir: &std::path::Path) -> Result<Vec<Task>, GymError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| GymError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| GymError::Io(format!("{}: {e}", p.display())))?;
            Task::from_json(&text).map_err(|e| GymError::InvalidTask(format!("{}: {e}", p.display())))
        })
        .collect()
}
