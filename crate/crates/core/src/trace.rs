//! Execution trace: one JSON object per line, plus an offline auditor.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::atl::Literal;
use crate::bt::{deserialize_bt, NodeId, NodeStatus};
use crate::map::Snapshot;
use crate::sim::{DisturbanceEffect, DisturbanceEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertMode {
    Replace,
    AddBefore,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Schedule {
        seed: Option<u64>,
        events: Vec<DisturbanceEvent>,
    },
    Disturbance {
        effect: DisturbanceEffect,
        applied: bool,
        note: String,
    },
    ActionStart {
        node: NodeId,
        action: String,
    },
    ActionFinish {
        node: NodeId,
        action: String,
        status: NodeStatus,
    },
    ActionHalt {
        node: NodeId,
        action: String,
    },
    Tick {
        status: NodeStatus,
    },
    ActionFailure {
        node: NodeId,
    },
    Expansion {
        index: usize,
        node: NodeId,
        literal: Literal,
        actions: Vec<String>,
        pre_union: Vec<Literal>,
    },
    Insertion {
        index: usize,
        mode: InsertMode,
        target: NodeId,
        higher_priority: Vec<NodeId>,
        conflicts: Vec<NodeId>,
        subtree_root: NodeId,
        tree: String,
    },
    Snapshot {
        world: Snapshot,
    },
    Outcome {
        status: String,
        literal: Option<Literal>,
        expansions: usize,
        ticks: u64,
    },
}

pub fn write_trace(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
        out.push('\n');
    }
    out
}

pub fn read_trace(text: &str) -> Result<Vec<TraceEvent>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("trace line {}: {e}", i + 1)))
        .collect()
}

/// Completed actions, in completion order.
pub fn completed_actions(events: &[TraceEvent]) -> Vec<String> {
    events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::ActionFinish {
                action,
                status: NodeStatus::Success,
                ..
            } => Some(action.clone()),
            _ => None,
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub insertions_checked: usize,
    pub add_before_checked: usize,
    pub snapshots_checked: usize,
}

/// Checks every add-before insertion for priority and every snapshot for
/// object conservation. Returns all violations found.
pub fn audit(events: &[TraceEvent]) -> Result<AuditReport, Vec<String>> {
    let mut report = AuditReport::default();
    let mut problems = Vec::new();
    let mut expected: Option<BTreeMap<String, usize>> = None;
    let mut spawned: Vec<String> = Vec::new();

    for e in events {
        match &e.kind {
            EventKind::Insertion {
                index,
                mode,
                conflicts,
                subtree_root,
                tree,
                ..
            } => {
                report.insertions_checked += 1;
                let tree = match deserialize_bt(tree) {
                    Ok(t) => t,
                    Err(err) => {
                        problems.push(format!("insertion {index}: unreadable tree: {err}"));
                        continue;
                    }
                };
                if *mode != InsertMode::AddBefore {
                    continue;
                }
                report.add_before_checked += 1;
                let order = tree.ids();
                let rank = |id: &NodeId| order.iter().position(|i| i == id);
                match rank(subtree_root) {
                    None => problems.push(format!("insertion {index}: subtree root {subtree_root} missing")),
                    Some(r) => {
                        for c in conflicts {
                            match rank(c) {
                                Some(rc) if r < rc => {}
                                _ => problems.push(format!(
                                    "insertion {index}: subtree root {subtree_root} does not precede conflict {c}"
                                )),
                            }
                        }
                    }
                }
            }
            EventKind::Disturbance {
                effect: DisturbanceEffect::SpawnObstacle { object, .. },
                applied: true,
                ..
            } => spawned.push(object.clone()),
            EventKind::Snapshot { world } => {
                report.snapshots_checked += 1;
                let mut counts: BTreeMap<String, usize> = BTreeMap::new();
                for o in world.occupancy.values().chain(world.gripper.iter()) {
                    *counts.entry(o.clone()).or_default() += 1;
                }
                if let Some((o, _)) = counts.iter().find(|(_, n)| **n > 1) {
                    problems.push(format!("tick {}: `{o}` is in more than one place", e.tick));
                }
                if let Some(mut exp) = expected.take() {
                    for o in spawned.drain(..) {
                        *exp.entry(o).or_default() += 1;
                    }
                    let have: BTreeSet<&String> = counts.keys().collect();
                    let want: BTreeSet<&String> = exp.keys().collect();
                    if have != want {
                        problems.push(format!(
                            "tick {}: objects changed from {:?} to {:?}",
                            e.tick,
                            want,
                            have
                        ));
                    }
                }
                expected = Some(counts.into_keys().map(|o| (o, 1)).collect());
            }
            _ => {}
        }
    }
    if problems.is_empty() {
        Ok(report)
    } else {
        Err(problems)
    }
}
