use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::error::KernelError;
use super::frame::CoordinateSystem;
use super::sketch::{Sketch, SketchElement};
use super::solid::{BooleanOp, CsgSolid, ExtrudedProfile};
use super::voxel::voxelize_in;
use super::KernelConfig;

#[derive(Debug, Clone)]
pub enum Object {
    Frame(Arc<CoordinateSystem>),
    Sketch(Arc<Sketch>),
    Solid(Arc<CsgSolid>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    CoordinateSystem,
    Sketch,
    Solid,
}

impl Object {
    pub fn kind(&self) -> ObjectKind {
        match self {
            Object::Frame(_) => ObjectKind::CoordinateSystem,
            Object::Sketch(_) => ObjectKind::Sketch,
            Object::Solid(_) => ObjectKind::Solid,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    object: Object,
    consumed: bool,
}

/// One row of the geometric object list shown to the agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSummary {
    pub name: String,
    pub kind: ObjectKind,
    pub consumed: bool,
}

/// Name registry for one modeling session. Entries are never removed;
/// boolean operands are flagged as consumed instead.
#[derive(Debug, Clone, Default)]
pub struct Document {
    config: KernelConfig,
    objects: IndexMap<String, Entry>,
}

fn check_name(name: &str) -> Result<(), KernelError> {
    let ok = !name.is_empty()
        && name.len() <= 128
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(KernelError::InvalidName(name.to_string()))
    }
}

impl Document {
    pub fn new(config: KernelConfig) -> Self {
        Self {
            config,
            objects: IndexMap::new(),
        }
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Object> {
        self.objects.get(name).map(|e| &e.object)
    }

    pub fn is_consumed(&self, name: &str) -> Option<bool> {
        self.objects.get(name).map(|e| e.consumed)
    }

    pub fn solid(&self, name: &str) -> Option<&Arc<CsgSolid>> {
        match self.get(name) {
            Some(Object::Solid(s)) => Some(s),
            _ => None,
        }
    }

    /// Solids in creation order, newest last.
    pub fn solids(&self) -> impl Iterator<Item = (&str, &Arc<CsgSolid>, bool)> {
        self.objects.iter().filter_map(|(name, e)| match &e.object {
            Object::Solid(s) => Some((name.as_str(), s, e.consumed)),
            _ => None,
        })
    }

    pub fn last_live_solid(&self) -> Option<(&str, &Arc<CsgSolid>)> {
        self.solids()
            .filter(|(_, _, consumed)| !consumed)
            .last()
            .map(|(n, s, _)| (n, s))
    }

    /// Every registered object in creation order.
    pub fn summaries(&self) -> Vec<ObjectSummary> {
        self.objects
            .iter()
            .map(|(name, e)| ObjectSummary {
                name: name.clone(),
                kind: e.object.kind(),
                consumed: e.consumed,
            })
            .collect()
    }

    fn reserve(&self, name: &str) -> Result<(), KernelError> {
        check_name(name)?;
        if self.objects.contains_key(name) {
            return Err(KernelError::DuplicateName(name.to_string()));
        }
        Ok(())
    }

    fn insert(&mut self, name: &str, object: Object) {
        self.objects.insert(
            name.to_string(),
            Entry {
                object,
                consumed: false,
            },
        );
    }

    pub fn set_coord_system(
        &mut self,
        name: &str,
        origin: [f64; 3],
        rotation: [f64; 3],
    ) -> Result<Arc<CoordinateSystem>, KernelError> {
        self.reserve(name)?;
        let cs = Arc::new(CoordinateSystem::new(name, origin, rotation)?);
        self.insert(name, Object::Frame(cs.clone()));
        Ok(cs)
    }

    pub fn create_sketch(
        &mut self,
        name: &str,
        frame: &str,
        elements: Vec<SketchElement>,
    ) -> Result<Arc<Sketch>, KernelError> {
        self.reserve(name)?;
        let cs = match self.get(frame) {
            Some(Object::Frame(cs)) => cs.clone(),
            _ => {
                check_name(frame)?;
                return Err(KernelError::UnknownFrame(frame.to_string()));
            }
        };
        let sketch = Arc::new(Sketch::new(name, cs, elements, &self.config)?);
        self.insert(name, Object::Sketch(sketch.clone()));
        Ok(sketch)
    }

    pub fn extrude(
        &mut self,
        sketch: &str,
        depth: f64,
        solid_name: &str,
    ) -> Result<Arc<CsgSolid>, KernelError> {
        let sk = match self.get(sketch) {
            Some(Object::Sketch(s)) => s.clone(),
            _ => {
                check_name(sketch)?;
                return Err(KernelError::UnknownSketch(sketch.to_string()));
            }
        };
        let profile = ExtrudedProfile::new(sk, depth, self.config.eps_geom)?;
        self.reserve(solid_name)?;
        let solid = Arc::new(CsgSolid::leaf(profile));
        self.insert(solid_name, Object::Solid(solid.clone()));
        Ok(solid)
    }

    fn live_solid(&self, name: &str) -> Result<Arc<CsgSolid>, KernelError> {
        check_name(name)?;
        let entry = self
            .objects
            .get(name)
            .ok_or_else(|| KernelError::UnknownObject(name.to_string()))?;
        let solid = match &entry.object {
            Object::Solid(s) => s.clone(),
            _ => return Err(KernelError::NotASolid(name.to_string())),
        };
        if entry.consumed {
            return Err(KernelError::OperandConsumed(name.to_string()));
        }
        Ok(solid)
    }

    fn is_empty_solid(&self, solid: &CsgSolid) -> bool {
        match solid.bounding_box() {
            None => true,
            Some(bb) => {
                let r = self.config.empty_check_resolution;
                voxelize_in(solid, &bb.padded_for_grid(r), r)
                    .map(|g| g.occupied_count() == 0)
                    .unwrap_or(true)
            }
        }
    }

    pub fn boolean(
        &mut self,
        base: &str,
        tool: &str,
        op: BooleanOp,
        name: &str,
    ) -> Result<Arc<CsgSolid>, KernelError> {
        let b = self.live_solid(base)?;
        let t = self.live_solid(tool)?;
        self.reserve(name)?;
        let solid = CsgSolid::node(op, b, t);
        if op != BooleanOp::Fuse && self.is_empty_solid(&solid) {
            return Err(KernelError::EmptyResult);
        }
        let solid = Arc::new(solid);
        self.consume(base);
        self.consume(tool);
        self.insert(name, Object::Solid(solid.clone()));
        Ok(solid)
    }

    pub fn multiple_fuse(&mut self, names: &[String], name: &str) -> Result<Arc<CsgSolid>, KernelError> {
        if names.len() < 2 {
            return Err(KernelError::FewerThanTwoOperands(names.len()));
        }
        let children = names
            .iter()
            .map(|n| self.live_solid(n))
            .collect::<Result<Vec<_>, _>>()?;
        self.reserve(name)?;
        let solid = Arc::new(CsgSolid::multi_fuse(children)?);
        for n in names {
            self.consume(n);
        }
        self.insert(name, Object::Solid(solid.clone()));
        Ok(solid)
    }

    fn consume(&mut self, name: &str) {
        if let Some(e) = self.objects.get_mut(name) {
            e.consumed = true;
        }
    }
}
