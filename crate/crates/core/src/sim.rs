//! Discrete simulator: condition checks against a [`WorldState`], actions
//! that take a fixed number of ticks, and scripted disturbances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atl::{ActionInstance, ActionTemplate, EffectOp, Library, Literal};
use crate::bt::{ActionRunner, BtError, ConditionEvaluator, NodeId, NodeStatus};
use crate::map::{distance, natural_cmp, WorldState};

pub const DEFAULT_ACTION_DURATION: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("`{literal}`: {message}")]
    BadArguments { literal: String, message: String },
}

/// Truth of `c` in `world`. Unknown object names are simply absent, so any
/// fact about them is false; unknown positions and locations are errors.
pub fn eval_condition(world: &WorldState, c: &Literal) -> Result<bool, SimError> {
    let bad = |message: String| SimError::BadArguments {
        literal: c.to_string(),
        message,
    };
    let arity = |n: usize| {
        if c.args.len() == n {
            Ok(())
        } else {
            Err(bad(format!("expected {n} argument(s)")))
        }
    };
    let position = |p: &str| {
        if world.has_position(p) {
            Ok(())
        } else {
            Err(bad(format!("unknown position `{p}`")))
        }
    };
    let a = &c.args;
    Ok(match c.predicate.as_str() {
        "object_at" => {
            arity(2)?;
            position(&a[1])?;
            world.occupant(&a[1]) == Some(a[0].as_str())
        }
        "holding" => {
            arity(1)?;
            world.gripper() == Some(a[0].as_str())
        }
        "hand_empty" => {
            arity(0)?;
            world.gripper().is_none()
        }
        "clear" => {
            arity(1)?;
            position(&a[0])?;
            world.is_free(&a[0])
        }
        "robot_at" => {
            arity(1)?;
            if !world.has_location(&a[0]) {
                return Err(bad(format!("unknown location `{}`", a[0])));
            }
            world.robot_location() == Some(a[0].as_str())
        }
        "accessible" => {
            arity(1)?;
            position(&a[0])?;
            world.front_of(&a[0]).is_none_or(|f| world.is_free(f))
        }
        "front_of" => {
            arity(2)?;
            position(&a[0])?;
            position(&a[1])?;
            world.front_of(&a[0]) == Some(a[1].as_str())
        }
        other => return Err(SimError::UnknownPredicate(other.to_string())),
    })
}

/// Applies ground effects to a copy of `world`: deletions first, then
/// additions. `None` if some effect does not apply or objects would be
/// created or lost.
pub fn apply_effects(world: &WorldState, effects: &[(EffectOp, Literal)]) -> Option<WorldState> {
    let mut next = world.clone();
    let mut vacated: BTreeMap<&str, &str> = BTreeMap::new();
    for (_, l) in effects.iter().filter(|(op, _)| *op == EffectOp::Delete) {
        let a = &l.args;
        match (l.predicate.as_str(), a.len()) {
            ("object_at", 2) => {
                next.vacate(&a[1], &a[0]).ok()?;
                vacated.insert(&a[0], &a[1]);
            }
            ("holding", 1) => next.release(&a[0]).ok()?,
            ("robot_at", 1) => {
                if next.robot_location() != Some(a[0].as_str()) {
                    return None;
                }
                next.clear_robot_location();
            }
            _ => return None,
        }
    }
    for (_, l) in effects.iter().filter(|(op, _)| *op == EffectOp::Add) {
        let a = &l.args;
        match (l.predicate.as_str(), a.len()) {
            ("object_at", 2) => next.occupy(&a[1], &a[0]).ok()?,
            ("holding", 1) => next.grip(&a[0], vacated.get(a[0].as_str()).map(|p| p.to_string())).ok()?,
            ("robot_at", 1) => next.set_robot_location(&a[0]).ok()?,
            _ => return None,
        }
    }
    if next.objects() != world.objects() || next.check_invariants().is_err() {
        return None;
    }
    Some(next)
}

/// An action in progress.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionExecution {
    pub instance: ActionInstance,
    pub elapsed: u32,
    pub duration: u32,
    effects: Vec<(EffectOp, Literal)>,
}

impl ActionExecution {
    pub fn new(template: &ActionTemplate, instance: ActionInstance, duration: u32) -> Self {
        let binding = instance.binding_map();
        let effects = template
            .effects
            .iter()
            .map(|e| (e.op, e.pattern.apply(&binding).expect("instance binds every parameter")))
            .collect();
        ActionExecution {
            instance,
            elapsed: 0,
            duration: duration.max(1),
            effects,
        }
    }
}

/// Advances `exec` by one tick. On the last tick the effects are applied
/// atomically; if they no longer apply the action fails and `world` is
/// unchanged.
pub fn step_action(world: &mut WorldState, exec: &mut ActionExecution) -> NodeStatus {
    exec.elapsed += 1;
    if exec.elapsed < exec.duration {
        return NodeStatus::Running;
    }
    match apply_effects(world, &exec.effects) {
        Some(next) => {
            *world = next;
            NodeStatus::Success
        }
        None => NodeStatus::Failure,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    AtTick(u64),
    /// Fires before the first tick at which an action of this name is running.
    WhenActionRunning(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropTarget {
    /// Nearest free position to where the object was picked from.
    Source,
    Position(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisturbanceEffect {
    DropHeld { to: DropTarget },
    SpawnObstacle { object: String, at: String },
    MoveObject { object: String, to: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisturbanceEvent {
    pub trigger: Trigger,
    pub effect: DisturbanceEffect,
}

/// Outcome of one fired event.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppliedDisturbance {
    pub event: DisturbanceEvent,
    pub applied: bool,
    pub note: String,
}

/// Disturbance events with fire-once bookkeeping.
#[derive(Clone, Debug, Default)]
pub struct Schedule {
    events: Vec<DisturbanceEvent>,
    fired: Vec<bool>,
}

impl Schedule {
    pub fn new(events: Vec<DisturbanceEvent>) -> Self {
        let fired = vec![false; events.len()];
        Schedule { events, fired }
    }

    pub fn events(&self) -> &[DisturbanceEvent] {
        &self.events
    }
}

/// Fires every event due at `tick` given the running action, in schedule order.
pub fn apply_disturbances(
    world: &mut WorldState,
    schedule: &mut Schedule,
    tick: u64,
    running: Option<&str>,
) -> Vec<AppliedDisturbance> {
    let mut out = Vec::new();
    for (event, fired) in schedule.events.iter().zip(schedule.fired.iter_mut()) {
        if *fired {
            continue;
        }
        let due = match &event.trigger {
            Trigger::AtTick(t) => *t <= tick,
            Trigger::WhenActionRunning(name) => running == Some(name.as_str()),
        };
        if !due {
            continue;
        }
        *fired = true;
        let (applied, note) = match apply_effect(world, &event.effect) {
            Ok(note) => (true, note),
            Err(note) => (false, note),
        };
        out.push(AppliedDisturbance {
            event: event.clone(),
            applied,
            note,
        });
    }
    out
}

fn apply_effect(world: &mut WorldState, effect: &DisturbanceEffect) -> Result<String, String> {
    match effect {
        DisturbanceEffect::DropHeld { to } => {
            let object = world.gripper().ok_or("gripper empty")?.to_string();
            let target = match to {
                DropTarget::Position(p) => p.clone(),
                DropTarget::Source => drop_position(world).ok_or("no free position")?,
            };
            world.put(&object, &target).map_err(|e| e.to_string())?;
            Ok(format!("{object} dropped at {target}"))
        }
        DisturbanceEffect::SpawnObstacle { object, at } => {
            world.spawn(object, at).map_err(|e| e.to_string())?;
            Ok(format!("{object} appeared at {at}"))
        }
        DisturbanceEffect::MoveObject { object, to } => {
            world.relocate(object, to).map_err(|e| e.to_string())?;
            Ok(format!("{object} moved to {to}"))
        }
    }
}

/// Free position nearest to the held object's source, lowest id on ties.
pub fn drop_position(world: &WorldState) -> Option<String> {
    let layout = world.layout();
    let origin = world.gripper_source().and_then(|s| layout.positions.get(s)).map(|i| i.coords);
    let mut free = world.free_positions();
    if let Some(origin) = origin {
        free.sort_by(|a, b| {
            let da = distance(&layout.positions[*a].coords, &origin);
            let db = distance(&layout.positions[*b].coords, &origin);
            da.total_cmp(&db).then_with(|| natural_cmp(a, b))
        });
    }
    free.first().map(|p| p.to_string())
}

/// What happened to an action node during a tick.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActionEvent {
    Started { node: NodeId, action: ActionInstance },
    Finished { node: NodeId, action: ActionInstance, status: NodeStatus },
    Halted { node: NodeId, action: ActionInstance },
}

/// World plus running actions; implements the tick environment.
#[derive(Clone, Debug)]
pub struct Simulator<'a> {
    pub world: WorldState,
    library: &'a Library,
    duration: u32,
    running: BTreeMap<NodeId, ActionExecution>,
    events: Vec<ActionEvent>,
}

impl<'a> Simulator<'a> {
    pub fn new(world: WorldState, library: &'a Library, duration: u32) -> Self {
        Simulator {
            world,
            library,
            duration,
            running: BTreeMap::new(),
            events: Vec::new(),
        }
    }

    /// Name of a running action, if any (the lowest node id if several).
    pub fn running_action(&self) -> Option<&str> {
        self.running.values().next().map(|e| e.instance.name.as_str())
    }

    /// Cancels running actions the last traversal did not reach.
    pub fn halt_unvisited(&mut self, visited: &[NodeId]) {
        let stale: Vec<NodeId> = self.running.keys().copied().filter(|id| !visited.contains(id)).collect();
        for id in stale {
            let exec = self.running.remove(&id).expect("listed");
            self.events.push(ActionEvent::Halted {
                node: id,
                action: exec.instance,
            });
        }
    }

    pub fn drain_events(&mut self) -> Vec<ActionEvent> {
        std::mem::take(&mut self.events)
    }
}

impl ConditionEvaluator for Simulator<'_> {
    fn evaluate(&mut self, _: NodeId, literal: &Literal) -> Result<bool, BtError> {
        eval_condition(&self.world, literal).map_err(|e| BtError::Vocabulary(e.to_string()))
    }
}

impl ActionRunner for Simulator<'_> {
    fn run(&mut self, id: NodeId, action: &ActionInstance) -> Result<NodeStatus, BtError> {
        if !self.running.contains_key(&id) {
            let template = self
                .library
                .get(&action.name)
                .ok_or_else(|| BtError::Vocabulary(format!("unknown action `{}`", action.name)))?;
            self.running
                .insert(id, ActionExecution::new(template, action.clone(), self.duration));
            self.events.push(ActionEvent::Started {
                node: id,
                action: action.clone(),
            });
        }
        let exec = self.running.get_mut(&id).expect("inserted");
        let status = step_action(&mut self.world, exec);
        if status != NodeStatus::Running {
            let exec = self.running.remove(&id).expect("present");
            self.events.push(ActionEvent::Finished {
                node: id,
                action: exec.instance,
                status,
            });
        }
        Ok(status)
    }
}
