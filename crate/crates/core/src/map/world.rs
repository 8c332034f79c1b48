use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use super::{natural_cmp, MapError, Placement, SemanticMap};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorldError {
    #[error("unknown position `{0}`")]
    UnknownPosition(String),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("position `{0}` is occupied")]
    Occupied(String),
    #[error("object `{0}` is not on any position")]
    NotPlaced(String),
    #[error("object `{0}` already exists")]
    Exists(String),
    #[error("gripper is not empty")]
    GripperFull,
    #[error("gripper does not hold `{0}`")]
    NotHeld(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositionInfo {
    pub coords: [f64; 3],
    pub location: Option<String>,
    pub front: Option<String>,
}

/// Static scene geometry shared by every world derived from one map.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Layout {
    pub positions: BTreeMap<String, PositionInfo>,
    pub locations: BTreeMap<String, Vec<String>>,
}

/// Ground truth for condition checks: where every object is, what the
/// gripper holds and where the robot stands. Unlisted facts are false.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    layout: Arc<Layout>,
    occupancy: BTreeMap<String, Option<String>>,
    gripper: Option<String>,
    /// Position the held object was taken from.
    gripper_source: Option<String>,
    robot_location: Option<String>,
}

/// Serializable view of the mutable part of a world.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Snapshot {
    pub occupancy: BTreeMap<String, String>,
    pub gripper: Option<String>,
    pub robot: Option<String>,
}

impl WorldState {
    /// Builds the world described by `map`: objects snap to the nearest
    /// declared position, the robot starts at the map's start location.
    pub fn from_map(map: &SemanticMap) -> Result<Self, MapError> {
        map.validate()?;
        let mut layout = Layout::default();
        for p in &map.positions {
            layout.positions.insert(
                p.id.clone(),
                PositionInfo {
                    coords: p.coords,
                    location: None,
                    front: p.front.clone(),
                },
            );
        }
        for l in &map.locations {
            for p in &l.positions {
                layout.positions.get_mut(p).expect("validated").location = Some(l.id.clone());
            }
            layout.locations.insert(l.id.clone(), l.positions.clone());
        }
        let mut world = WorldState::empty(Arc::new(layout));
        for (object, position) in map.snap()? {
            world.occupancy.insert(position.to_string(), Some(object.to_string()));
        }
        world.gripper = map
            .objects
            .iter()
            .find(|o| o.placement == Placement::Held)
            .map(|o| o.id.clone());
        world.robot_location = map.robot.clone();
        Ok(world)
    }

    pub fn empty(layout: Arc<Layout>) -> Self {
        let occupancy = layout.positions.keys().map(|p| (p.clone(), None)).collect();
        WorldState {
            layout,
            occupancy,
            gripper: None,
            gripper_source: None,
            robot_location: None,
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn positions(&self) -> impl Iterator<Item = &str> {
        self.layout.positions.keys().map(String::as_str)
    }

    pub fn locations(&self) -> impl Iterator<Item = &str> {
        self.layout.locations.keys().map(String::as_str)
    }

    pub fn has_position(&self, p: &str) -> bool {
        self.layout.positions.contains_key(p)
    }

    pub fn has_location(&self, l: &str) -> bool {
        self.layout.locations.contains_key(l)
    }

    pub fn occupant(&self, p: &str) -> Option<&str> {
        self.occupancy.get(p).and_then(|o| o.as_deref())
    }

    pub fn is_free(&self, p: &str) -> bool {
        self.has_position(p) && self.occupant(p).is_none()
    }

    pub fn position_of(&self, object: &str) -> Option<&str> {
        self.occupancy
            .iter()
            .find(|(_, o)| o.as_deref() == Some(object))
            .map(|(p, _)| p.as_str())
    }

    pub fn location_of(&self, p: &str) -> Option<&str> {
        self.layout.positions.get(p).and_then(|i| i.location.as_deref())
    }

    pub fn front_of(&self, p: &str) -> Option<&str> {
        self.layout.positions.get(p).and_then(|i| i.front.as_deref())
    }

    pub fn gripper(&self) -> Option<&str> {
        self.gripper.as_deref()
    }

    pub fn gripper_source(&self) -> Option<&str> {
        self.gripper_source.as_deref()
    }

    pub fn robot_location(&self) -> Option<&str> {
        self.robot_location.as_deref()
    }

    /// Every object present in the scene, in identifier order.
    pub fn objects(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.occupancy.values().flatten().map(String::as_str).collect();
        out.extend(self.gripper.as_deref());
        out.sort_by(|a, b| natural_cmp(a, b));
        out
    }

    pub fn contains_object(&self, object: &str) -> bool {
        self.gripper.as_deref() == Some(object) || self.position_of(object).is_some()
    }

    pub fn free_positions(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.positions().filter(|p| self.is_free(p)).collect();
        out.sort_by(|a, b| natural_cmp(a, b));
        out
    }

    pub fn take_into_gripper(&mut self, object: &str) -> Result<(), WorldError> {
        if self.gripper.is_some() {
            return Err(WorldError::GripperFull);
        }
        let p = self
            .position_of(object)
            .ok_or_else(|| WorldError::NotPlaced(object.to_string()))?
            .to_string();
        self.occupancy.insert(p.clone(), None);
        self.gripper = Some(object.to_string());
        self.gripper_source = Some(p);
        Ok(())
    }

    pub fn put(&mut self, object: &str, p: &str) -> Result<(), WorldError> {
        if self.gripper.as_deref() != Some(object) {
            return Err(WorldError::NotHeld(object.to_string()));
        }
        self.require_free(p)?;
        self.occupancy.insert(p.to_string(), Some(object.to_string()));
        self.gripper = None;
        self.gripper_source = None;
        Ok(())
    }

    /// Moves a placed object to another position without the gripper.
    pub fn relocate(&mut self, object: &str, p: &str) -> Result<(), WorldError> {
        let from = self
            .position_of(object)
            .ok_or_else(|| WorldError::NotPlaced(object.to_string()))?
            .to_string();
        self.require_free(p)?;
        self.occupancy.insert(from, None);
        self.occupancy.insert(p.to_string(), Some(object.to_string()));
        Ok(())
    }

    /// Adds an object that was not in the scene.
    pub fn spawn(&mut self, object: &str, p: &str) -> Result<(), WorldError> {
        if self.contains_object(object) {
            return Err(WorldError::Exists(object.to_string()));
        }
        self.require_free(p)?;
        self.occupancy.insert(p.to_string(), Some(object.to_string()));
        Ok(())
    }

    pub fn set_robot_location(&mut self, l: &str) -> Result<(), WorldError> {
        if !self.has_location(l) {
            return Err(WorldError::UnknownLocation(l.to_string()));
        }
        self.robot_location = Some(l.to_string());
        Ok(())
    }

    pub fn clear_robot_location(&mut self) {
        self.robot_location = None;
    }

    // Single-fact mutators used by action effects. They may leave the world
    // transiently inconsistent; callers check invariants after a batch.

    pub(crate) fn vacate(&mut self, p: &str, object: &str) -> Result<(), WorldError> {
        if self.occupant(p) != Some(object) {
            return Err(WorldError::NotPlaced(object.to_string()));
        }
        self.occupancy.insert(p.to_string(), None);
        Ok(())
    }

    pub(crate) fn occupy(&mut self, p: &str, object: &str) -> Result<(), WorldError> {
        self.require_free(p)?;
        self.occupancy.insert(p.to_string(), Some(object.to_string()));
        Ok(())
    }

    pub(crate) fn grip(&mut self, object: &str, source: Option<String>) -> Result<(), WorldError> {
        if self.gripper.is_some() {
            return Err(WorldError::GripperFull);
        }
        self.gripper = Some(object.to_string());
        self.gripper_source = source;
        Ok(())
    }

    pub(crate) fn release(&mut self, object: &str) -> Result<(), WorldError> {
        if self.gripper.as_deref() != Some(object) {
            return Err(WorldError::NotHeld(object.to_string()));
        }
        self.gripper = None;
        self.gripper_source = None;
        Ok(())
    }

    fn require_free(&self, p: &str) -> Result<(), WorldError> {
        if !self.has_position(p) {
            return Err(WorldError::UnknownPosition(p.to_string()));
        }
        if self.occupant(p).is_some() {
            return Err(WorldError::Occupied(p.to_string()));
        }
        Ok(())
    }

    /// Each object sits in exactly one place and positions hold at most one object.
    pub fn check_invariants(&self) -> Result<(), String> {
        let all: Vec<&str> = self
            .occupancy
            .values()
            .flatten()
            .map(String::as_str)
            .chain(self.gripper.as_deref())
            .collect();
        let mut sorted = all.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(format!("object `{}` is in more than one place", w[0]));
        }
        if self.occupancy.len() != self.layout.positions.len()
            || self.occupancy.keys().any(|p| !self.layout.positions.contains_key(p))
        {
            return Err("occupancy does not match the layout".into());
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            occupancy: self
                .occupancy
                .iter()
                .filter_map(|(p, o)| o.as_ref().map(|o| (p.clone(), o.clone())))
                .collect(),
            gripper: self.gripper.clone(),
            robot: self.robot_location.clone(),
        }
    }
}
