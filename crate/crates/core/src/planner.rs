//! The update loop: tick the tree, find the condition that failed, expand it
//! into a fallback over the actions that achieve it and insert that subtree
//! where it cannot be undone by higher-priority conditions.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atl::{ground, match_templates, ActionInstance, AtlError, GroundingPolicy, Library, Literal, PredicateRegistry};
use crate::bt::{
    add_before, get_failed_node, guard_conditions, replace, serialize_bt, tick, BtError, BtNode, FailedNode, NodeId,
    NodeKind, NodeStatus,
};
use crate::map::WorldState;
use crate::sim::{apply_disturbances, ActionEvent, DisturbanceEvent, Schedule, Simulator, DEFAULT_ACTION_DURATION};
use crate::trace::{EventKind, InsertMode, TraceEvent};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub max_expansions: usize,
    pub max_ticks: u64,
    /// Never expand the same condition node twice.
    pub memo: bool,
    /// Ticks an action runs before it completes.
    pub action_duration: u32,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            max_expansions: 32,
            max_ticks: 1000,
            memo: true,
            action_duration: DEFAULT_ACTION_DURATION,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.max_expansions == 0 || self.max_ticks == 0 || self.action_duration == 0 {
            return Err(PlanError::Config(
                "max_expansions, max_ticks and action_duration must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("no applicable action achieves `{0}`")]
    NoApplicableAction(Literal),
    #[error(transparent)]
    Atl(#[from] AtlError),
    #[error(transparent)]
    Bt(#[from] BtError),
    #[error("invalid planner config: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "literal", rename_all = "snake_case")]
pub enum OutcomeStatus {
    Succeeded,
    UnsolvableCondition(Literal),
    BudgetExhausted,
}

impl OutcomeStatus {
    pub fn name(&self) -> &'static str {
        match self {
            OutcomeStatus::Succeeded => "succeeded",
            OutcomeStatus::UnsolvableCondition(_) => "unsolvable_condition",
            OutcomeStatus::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlannerOutcome {
    pub status: OutcomeStatus,
    pub tree: BtNode,
    pub trace: Vec<TraceEvent>,
    pub world: WorldState,
    pub expansions: usize,
    pub ticks: u64,
}

impl PlannerOutcome {
    pub fn completed_actions(&self) -> Vec<String> {
        crate::trace::completed_actions(&self.trace)
    }
}

/// A remedial subtree for one failed condition.
#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    /// `Fallback[c_f, Sequence[pre…, action]…]`.
    pub tree: BtNode,
    /// Every ground pre-condition across the alternatives, deduplicated.
    pub pre_union: Vec<Literal>,
    pub actions: Vec<ActionInstance>,
}

/// Builds the fallback for `c_f`, numbering new nodes from `first_id`.
/// Templates whose grounding finds no witness are left out.
pub fn expand(
    c_f: &Literal,
    library: &Library,
    registry: &PredicateRegistry,
    world: &WorldState,
    policy: &GroundingPolicy,
    first_id: u32,
) -> Result<Expansion, PlanError> {
    registry.type_of(&c_f.predicate)?;
    let mut next = first_id;
    let mut id = || {
        next += 1;
        next - 1
    };
    let root = id();
    let mut children = vec![BtNode::condition(id(), c_f.clone())];
    let mut pre_union: Vec<Literal> = Vec::new();
    let mut actions: Vec<ActionInstance> = Vec::new();
    for m in match_templates(c_f, library) {
        let (instance, pre) = match ground(m.template, &m.binding, world, policy) {
            Ok(g) => g,
            Err(AtlError::NoWitness { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        if actions.contains(&instance) {
            continue;
        }
        let seq_id = id();
        let mut seq: Vec<BtNode> = pre.iter().map(|l| BtNode::condition(id(), l.clone())).collect();
        seq.push(BtNode::action(id(), instance.clone()));
        children.push(BtNode::sequence(seq_id, seq));
        for l in pre {
            if !pre_union.contains(&l) {
                pre_union.push(l);
            }
        }
        actions.push(instance);
    }
    if actions.is_empty() {
        return Err(PlanError::NoApplicableAction(c_f.clone()));
    }
    Ok(Expansion {
        tree: BtNode::fallback(root, children),
        pre_union,
        actions,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Insertion {
    pub tree: BtNode,
    pub mode: InsertMode,
    /// Conditions guaranteed to hold whenever `c_f` is reached.
    pub higher_priority: Vec<NodeId>,
    pub conflicts: Vec<NodeId>,
}

/// Places `t_exp` into `tree`. Conditions that must hold before `c_f_node`
/// and share an exclusivity tag with a pre-condition of the expansion would
/// be violated by running it there, so in that case the subtree goes in
/// front of them and `c_f_node` stays; otherwise it replaces `c_f_node`.
pub fn insert(
    tree: &BtNode,
    c_f_node: NodeId,
    t_exp: BtNode,
    pre_union: &[Literal],
    registry: &PredicateRegistry,
) -> Result<Insertion, PlanError> {
    let higher_priority = guard_conditions(tree, c_f_node)?;
    let mut tags = BTreeSet::new();
    for l in pre_union {
        if let Some(t) = registry.type_of(&l.predicate)? {
            tags.insert(t);
        }
    }
    let mut conflicts = Vec::new();
    for id in &higher_priority {
        let literal = tree.find(*id).and_then(BtNode::literal).ok_or(BtError::NotFound(*id))?;
        if let Some(t) = registry.type_of(&literal.predicate)? {
            if tags.contains(t) {
                conflicts.push(*id);
            }
        }
    }
    let (tree, mode) = if conflicts.is_empty() {
        (replace(tree, c_f_node, t_exp)?, InsertMode::Replace)
    } else {
        let set = conflicts.iter().copied().collect();
        (add_before(tree, &set, t_exp)?, InsertMode::AddBefore)
    };
    Ok(Insertion {
        tree,
        mode,
        higher_priority,
        conflicts,
    })
}

/// Goal positions are never used as temporary buffers.
pub fn reservation_policy(goal: &BtNode, world: &WorldState) -> GroundingPolicy {
    GroundingPolicy {
        reserved: goal
            .preorder()
            .into_iter()
            .filter_map(BtNode::literal)
            .flat_map(|l| l.args.iter())
            .filter(|a| world.has_position(a))
            .cloned()
            .collect(),
    }
}

/// Ticks `initial` against `world` until it succeeds, a failed condition
/// cannot be achieved, or a budget runs out.
pub fn run(
    initial: BtNode,
    world: WorldState,
    library: &Library,
    registry: &PredicateRegistry,
    config: &PlannerConfig,
    disturbances: &[DisturbanceEvent],
    policy: &GroundingPolicy,
) -> Result<PlannerOutcome, PlanError> {
    config.validate()?;
    initial.validate()?;
    let mut tree = initial;
    let mut sim = Simulator::new(world, library, config.action_duration);
    let mut schedule = Schedule::new(disturbances.to_vec());
    let mut trace = vec![
        TraceEvent {
            tick: 0,
            kind: EventKind::Schedule {
                seed: None,
                events: disturbances.to_vec(),
            },
        },
        TraceEvent {
            tick: 0,
            kind: EventKind::Snapshot {
                world: sim.world.snapshot(),
            },
        },
    ];
    let mut memo: HashSet<NodeId> = HashSet::new();
    let mut expansions = 0usize;
    let mut status = OutcomeStatus::BudgetExhausted;
    let mut ticks = 0u64;

    for t in 1..=config.max_ticks {
        ticks = t;
        let running = sim.running_action().map(str::to_string);
        for d in apply_disturbances(&mut sim.world, &mut schedule, t, running.as_deref()) {
            trace.push(TraceEvent {
                tick: t,
                kind: EventKind::Disturbance {
                    effect: d.event.effect,
                    applied: d.applied,
                    note: d.note,
                },
            });
        }

        let result = tick(&tree, &mut sim)?;
        sim.halt_unvisited(&result.visited);
        for e in sim.drain_events() {
            let kind = match e {
                ActionEvent::Started { node, action } => EventKind::ActionStart {
                    node,
                    action: action.to_string(),
                },
                ActionEvent::Finished { node, action, status } => EventKind::ActionFinish {
                    node,
                    action: action.to_string(),
                    status,
                },
                ActionEvent::Halted { node, action } => EventKind::ActionHalt {
                    node,
                    action: action.to_string(),
                },
            };
            trace.push(TraceEvent { tick: t, kind });
        }
        trace.push(TraceEvent {
            tick: t,
            kind: EventKind::Tick {
                status: result.root_status,
            },
        });
        trace.push(TraceEvent {
            tick: t,
            kind: EventKind::Snapshot {
                world: sim.world.snapshot(),
            },
        });

        match result.root_status {
            NodeStatus::Success => {
                status = OutcomeStatus::Succeeded;
                break;
            }
            NodeStatus::Running => continue,
            NodeStatus::Failure => {}
        }
        let failed = match get_failed_node(&result, &tree)? {
            FailedNode::Action(node) => {
                trace.push(TraceEvent {
                    tick: t,
                    kind: EventKind::ActionFailure { node },
                });
                continue;
            }
            FailedNode::Condition(id) => id,
        };
        let literal_of = |id: NodeId| tree.find(id).and_then(BtNode::literal).cloned().ok_or(BtError::NotFound(id));
        let target = if config.memo && memo.contains(&failed) {
            // Deepest earlier failure that has not been tried yet.
            result.visited.iter().rev().copied().find(|id| {
                !memo.contains(id)
                    && result.per_node.get(id) == Some(&NodeStatus::Failure)
                    && matches!(tree.find(*id).map(|n| &n.kind), Some(NodeKind::Condition(_)))
            })
        } else {
            Some(failed)
        };
        let Some(target) = target else {
            status = OutcomeStatus::UnsolvableCondition(literal_of(failed)?);
            break;
        };
        if expansions >= config.max_expansions {
            break;
        }
        let c_f = literal_of(target)?;
        let exp = match expand(&c_f, library, registry, &sim.world, policy, tree.max_id() + 1) {
            Ok(e) => e,
            Err(PlanError::NoApplicableAction(l)) => {
                status = OutcomeStatus::UnsolvableCondition(l);
                break;
            }
            Err(e) => return Err(e),
        };
        expansions += 1;
        trace.push(TraceEvent {
            tick: t,
            kind: EventKind::Expansion {
                index: expansions,
                node: target,
                literal: c_f,
                actions: exp.actions.iter().map(ToString::to_string).collect(),
                pre_union: exp.pre_union.clone(),
            },
        });
        let subtree_root = exp.tree.id;
        memo.insert(target);
        memo.insert(exp.tree.children()[0].id);
        let ins = insert(&tree, target, exp.tree, &exp.pre_union, registry)?;
        tree = ins.tree;
        trace.push(TraceEvent {
            tick: t,
            kind: EventKind::Insertion {
                index: expansions,
                mode: ins.mode,
                target,
                higher_priority: ins.higher_priority,
                conflicts: ins.conflicts,
                subtree_root,
                tree: serialize_bt(&tree),
            },
        });
    }

    trace.push(TraceEvent {
        tick: ticks,
        kind: EventKind::Outcome {
            status: status.name().into(),
            literal: match &status {
                OutcomeStatus::UnsolvableCondition(l) => Some(l.clone()),
                _ => None,
            },
            expansions,
            ticks,
        },
    });
    Ok(PlannerOutcome {
        status,
        tree,
        trace,
        world: sim.world,
        expansions,
        ticks,
    })
}
