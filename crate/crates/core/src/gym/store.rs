use super::episode::{TrajectoryRecord, TRAJECTORY_SCHEMA_VERSION};
use super::GymError;

/// One JSON line, without the trailing newline.
pub fn save_trajectory(record: &TrajectoryRecord) -> String {
    serde_json::to_string(record).expect("trajectory serializes")
}

pub fn save_trajectories(records: &[TrajectoryRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&save_trajectory(r));
        s.push('\n');
    }
    s
}

pub fn load_trajectory(line: &str) -> Result<TrajectoryRecord, GymError> {
    load_line(line, 1)
}

fn load_line(line: &str, number: usize) -> Result<TrajectoryRecord, GymError> {
    let err = |detail: String| GymError::Store { line: number, detail };
    let v: serde_json::Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
    match v.get("schema_version").and_then(serde_json::Value::as_u64) {
        Some(found) if found == TRAJECTORY_SCHEMA_VERSION as u64 => {}
        Some(found) => {
            return Err(err(format!(
                "schema version {found} is not supported (expected {TRAJECTORY_SCHEMA_VERSION})"
            )))
        }
        None => return Err(err("missing schema_version".into())),
    }
    serde_json::from_value(v).map_err(|e| err(e.to_string()))
}

/// Parses a trajectory file. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn load_trajectories(text: &str) -> Result<Vec<TrajectoryRecord>, GymError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| load_line(l, i + 1))
        .collect()
}
