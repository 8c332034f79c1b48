//! Semantic map: the XML scene description and the world state built from it.
//!
//! Schema (version 1):
//!
//! ```xml
//! <semantic_map version="1">
//!   <objects>
//!     <object id="red_can" name="red can" color="red" shape="cylinder" x="0.1" y="0.3" z="0.05"/>
//!     <object id="milk" name="milk" color="white" shape="box" held="true"/>
//!   </objects>
//!   <positions>
//!     <position id="position_1" x="0.1" y="0.3" z="0.05" capacity="1" front="position_0"/>
//!   </positions>
//!   <locations>
//!     <location id="kitchen" name="kitchen">
//!       <contains position="position_1"/>
//!     </location>
//!   </locations>
//!   <robot location="kitchen"/>
//! </semantic_map>
//! ```
//!
//! `front`, `capacity`, `<locations>` and `<robot>` are optional. An object
//! is placed at the position whose coordinates lie within
//! [`PLACEMENT_TOLERANCE`] of its own; `held="true"` puts it in the gripper.

mod world;
mod xml;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use world::{Layout, PositionInfo, Snapshot, WorldError, WorldState};
pub use xml::{parse_map, serialize_map};

/// Snapping distance between an object's coordinates and a position, in meters.
pub const PLACEMENT_TOLERANCE: f64 = 0.01;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("xml error at {line}:{column}: {message}")]
    Xml { line: usize, column: usize, message: String },
    #[error("invalid map: {0}")]
    Validation(String),
    #[error("object `{object}` is farther than 1 cm from every declared position")]
    Placement { object: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Placement {
    At([f64; 3]),
    Held,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapObject {
    pub id: String,
    pub name: String,
    pub color: String,
    pub shape: String,
    pub placement: Placement,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapPosition {
    pub id: String,
    pub coords: [f64; 3],
    /// Position that must be clear before this one can be reached.
    pub front: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapLocation {
    pub id: String,
    pub name: String,
    pub positions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemanticMap {
    pub objects: Vec<MapObject>,
    pub positions: Vec<MapPosition>,
    pub locations: Vec<MapLocation>,
    /// Declared start location of the robot.
    pub robot: Option<String>,
}

impl SemanticMap {
    pub fn empty() -> Self {
        SemanticMap {
            objects: Vec::new(),
            positions: Vec::new(),
            locations: Vec::new(),
            robot: None,
        }
    }

    pub fn position(&self, id: &str) -> Option<&MapPosition> {
        self.positions.iter().find(|p| p.id == id)
    }

    pub fn object(&self, id: &str) -> Option<&MapObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Checks id uniqueness, references and object placement.
    pub fn validate(&self) -> Result<(), MapError> {
        let invalid = |m: String| Err(MapError::Validation(m));
        let mut seen = BTreeSet::new();
        for o in &self.objects {
            if !seen.insert(&o.id) {
                return invalid(format!("duplicate object id `{}`", o.id));
            }
        }
        let mut seen = BTreeSet::new();
        for p in &self.positions {
            if !seen.insert(&p.id) {
                return invalid(format!("duplicate position id `{}`", p.id));
            }
        }
        for p in &self.positions {
            if let Some(front) = &p.front {
                if front == &p.id || self.position(front).is_none() {
                    return invalid(format!("position `{}` has dangling front `{front}`", p.id));
                }
            }
        }
        let mut seen = BTreeSet::new();
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for l in &self.locations {
            if !seen.insert(&l.id) {
                return invalid(format!("duplicate location id `{}`", l.id));
            }
            for p in &l.positions {
                if self.position(p).is_none() {
                    return invalid(format!("location `{}` contains unknown position `{p}`", l.id));
                }
                if let Some(other) = owner.insert(p, &l.id) {
                    return invalid(format!("position `{p}` belongs to both `{other}` and `{}`", l.id));
                }
            }
        }
        if let Some(robot) = &self.robot {
            if !self.locations.iter().any(|l| &l.id == robot) {
                return invalid(format!("robot starts at unknown location `{robot}`"));
            }
        }
        if self.objects.iter().filter(|o| o.placement == Placement::Held).count() > 1 {
            return invalid("more than one object is held".into());
        }
        self.snap().map(|_| ())
    }

    /// Object id → position id for every placed object.
    pub(crate) fn snap(&self) -> Result<BTreeMap<&str, &str>, MapError> {
        let mut placed = BTreeMap::new();
        let mut occupied: BTreeMap<&str, &str> = BTreeMap::new();
        for o in &self.objects {
            let Placement::At(c) = &o.placement else { continue };
            let nearest = self
                .positions
                .iter()
                .map(|p| (distance(&p.coords, c), p))
                .filter(|(d, _)| *d <= PLACEMENT_TOLERANCE)
                .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| natural_cmp(&a.1.id, &b.1.id)));
            let Some((_, p)) = nearest else {
                return Err(MapError::Placement { object: o.id.clone() });
            };
            if let Some(other) = occupied.insert(&p.id, &o.id) {
                return Err(MapError::Validation(format!(
                    "objects `{other}` and `{}` share position `{}`",
                    o.id, p.id
                )));
            }
            placed.insert(o.id.as_str(), p.id.as_str());
        }
        Ok(placed)
    }

    /// The world as a map again: objects move to their current positions'
    /// coordinates; metadata comes from `self` where the object is known.
    pub fn with_world(&self, world: &WorldState) -> SemanticMap {
        let mut map = self.clone();
        let meta = |id: &str| {
            self.object(id).cloned().unwrap_or_else(|| MapObject {
                id: id.to_string(),
                name: id.replace('_', " "),
                color: "unknown".into(),
                shape: "unknown".into(),
                placement: Placement::Held,
            })
        };
        map.objects = world
            .objects()
            .into_iter()
            .map(|id| {
                let mut o = meta(id);
                o.placement = match world.position_of(id) {
                    Some(p) => Placement::At(world.layout().positions[p].coords),
                    None => Placement::Held,
                };
                o
            })
            .collect();
        map.robot = world.robot_location().map(str::to_string);
        map
    }
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Orders identifiers so that `position_2` sorts before `position_10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let digits = s.len() - s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (head, tail) = s.split_at(s.len() - digits);
        (head, tail.parse().ok())
    }
    let (ha, na) = split(a);
    let (hb, nb) = split(b);
    ha.cmp(hb).then(na.cmp(&nb)).then_with(|| a.cmp(b))
}
