use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::cloud::sample_points;
use super::MetricsError;
use crate::geometry::CsgSolid;
use crate::protocol::ToolCall;

fn count_scalars(v: &Value) -> usize {
    match v {
        Value::Number(_) => 1,
        Value::Array(items) => items.iter().map(count_scalars).sum(),
        Value::Object(map) => map.values().map(count_scalars).sum(),
        _ => 0,
    }
}

/// Numeric scalars in all call arguments divided by the part count.
pub fn parameter_density(program: &[ToolCall], part_count: usize) -> Result<f64, MetricsError> {
    if part_count == 0 {
        return Err(MetricsError::ZeroParts);
    }
    let n: usize = program.iter().map(|c| count_scalars(&c.arguments)).sum();
    Ok(n as f64 / part_count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConversionOutcome {
    Valid,
    NotCompleted,
    NoFinalSolid,
    EmptySolid,
}

impl ConversionOutcome {
    pub fn is_valid(self) -> bool {
        self == ConversionOutcome::Valid
    }
}

/// Classifies an episode result for the invalidity ratio: it must have
/// signalled completion and produced a solid that yields a point cloud.
pub fn classify_conversion(completed: bool, solid: Option<&CsgSolid>, resolution: usize, seed: u64) -> ConversionOutcome {
    if !completed {
        return ConversionOutcome::NotCompleted;
    }
    match solid {
        None => ConversionOutcome::NoFinalSolid,
        Some(s) => match sample_points(s, 1, seed, resolution) {
            Ok(_) => ConversionOutcome::Valid,
            Err(_) => ConversionOutcome::EmptySolid,
        },
    }
}

pub fn invalidity_ratio(outcomes: &[ConversionOutcome]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes.iter().filter(|o| !o.is_valid()).count() as f64 / outcomes.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn density_arithmetic() {
        let call = ToolCall::new("x", json!({"a": [1, 2, 3], "b": {"c": 4.5}, "name": "S"}));
        let prog = vec![call.clone(), call.clone(), call];
        assert_eq!(parameter_density(&prog, 3).unwrap(), 4.0);
        assert_eq!(parameter_density(&[], 2).unwrap(), 0.0);
        assert!(matches!(parameter_density(&prog, 0), Err(MetricsError::ZeroParts)));
    }

    #[test]
    fn ratio() {
        use ConversionOutcome::*;
        assert_eq!(invalidity_ratio(&[Valid, Valid]), 0.0);
        assert_eq!(invalidity_ratio(&[Valid, Valid, NotCompleted, Valid]), 0.25);
        assert_eq!(classify_conversion(false, None, 16, 0), NotCompleted);
        assert_eq!(classify_conversion(true, None, 16, 0), NoFinalSolid);
    }
}
