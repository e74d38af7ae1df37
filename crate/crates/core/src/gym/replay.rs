use std::sync::Arc;

use super::GymError;
use crate::feedback::{Label, Observation};
use crate::geometry::{CsgSolid, Document, KernelConfig};
use crate::protocol::{ToolCall, ToolRegistry};

pub const FINAL_MODEL: &str = "FinalModel";

/// `FinalModel` when it names a solid, else the last unconsumed solid.
pub fn resolve_final_solid(doc: &Document) -> Option<(String, Arc<CsgSolid>)> {
    if let Some(s) = doc.solid(FINAL_MODEL) {
        return Some((FINAL_MODEL.to_string(), s.clone()));
    }
    doc.last_live_solid().map(|(n, s)| (n.to_string(), s.clone()))
}

pub struct ReplayOutput {
    pub document: Document,
    pub observations: Vec<Observation>,
    pub final_name: String,
    pub final_solid: Arc<CsgSolid>,
}

/// Executes a program through the tool registry. The first failing call
/// aborts with its index.
pub fn replay(program: &[ToolCall], config: &KernelConfig) -> Result<ReplayOutput, GymError> {
    let registry = ToolRegistry::standard();
    let mut document = Document::new(config.clone());
    let mut observations = Vec::with_capacity(program.len());
    for (index, call) in program.iter().enumerate() {
        let obs = registry.execute(&mut document, call);
        if obs.label == Label::Fail {
            return Err(GymError::Replay {
                index,
                detail: obs.message,
            });
        }
        observations.push(obs);
    }
    let (final_name, final_solid) = resolve_final_solid(&document).ok_or(GymError::Replay {
        index: program.len(),
        detail: "program produced no solid".into(),
    })?;
    Ok(ReplayOutput {
        document,
        observations,
        final_name,
        final_solid,
    })
}

/// Executes every call regardless of failures and returns whatever final
/// solid results.
pub fn replay_lenient(program: &[ToolCall], config: &KernelConfig) -> (Document, Vec<Observation>, Option<Arc<CsgSolid>>) {
    let registry = ToolRegistry::standard();
    let mut document = Document::new(config.clone());
    let observations = program.iter().map(|c| registry.execute(&mut document, c)).collect();
    let solid = resolve_final_solid(&document).map(|(_, s)| s);
    (document, observations, solid)
}
