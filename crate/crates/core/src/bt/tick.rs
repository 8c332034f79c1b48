use std::collections::BTreeMap;

use super::{BtError, BtNode, NodeId, NodeKind, NodeStatus};
use crate::atl::{ActionInstance, Literal};

pub trait ConditionEvaluator {
    fn evaluate(&mut self, id: NodeId, literal: &Literal) -> Result<bool, BtError>;
}

pub trait ActionRunner {
    fn run(&mut self, id: NodeId, action: &ActionInstance) -> Result<NodeStatus, BtError>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct TickResult {
    pub root_status: NodeStatus,
    pub per_node: BTreeMap<NodeId, NodeStatus>,
    pub visited: Vec<NodeId>,
}

/// One memoryless traversal: every control node restarts from its first child.
pub fn tick<E>(tree: &BtNode, env: &mut E) -> Result<TickResult, BtError>
where
    E: ConditionEvaluator + ActionRunner + ?Sized,
{
    tree.validate()?;
    let mut result = TickResult {
        root_status: NodeStatus::Failure,
        per_node: BTreeMap::new(),
        visited: Vec::new(),
    };
    result.root_status = visit(tree, env, &mut result)?;
    Ok(result)
}

fn visit<E>(node: &BtNode, env: &mut E, out: &mut TickResult) -> Result<NodeStatus, BtError>
where
    E: ConditionEvaluator + ActionRunner + ?Sized,
{
    out.visited.push(node.id);
    let status = match &node.kind {
        NodeKind::Condition(l) => {
            if env.evaluate(node.id, l)? {
                NodeStatus::Success
            } else {
                NodeStatus::Failure
            }
        }
        NodeKind::Action(a) => env.run(node.id, a)?,
        NodeKind::Sequence(children) => {
            let mut status = NodeStatus::Success;
            for c in children {
                status = visit(c, env, out)?;
                if status != NodeStatus::Success {
                    break;
                }
            }
            status
        }
        NodeKind::Fallback(children) => {
            let mut status = NodeStatus::Failure;
            for c in children {
                status = visit(c, env, out)?;
                if status != NodeStatus::Failure {
                    break;
                }
            }
            status
        }
    };
    out.per_node.insert(node.id, status);
    Ok(status)
}

/// Which leaf made the root fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailedNode {
    Condition(NodeId),
    /// An action failed; the planner re-ticks instead of expanding.
    Action(NodeId),
}

/// The last visited leaf of a failing traversal. Its failure is the one that
/// propagated to the root.
pub fn get_failed_node(result: &TickResult, tree: &BtNode) -> Result<FailedNode, BtError> {
    if result.root_status != NodeStatus::Failure {
        return Err(BtError::NotFailed);
    }
    for &id in result.visited.iter().rev() {
        let node = tree.find(id).ok_or(BtError::NotFound(id))?;
        if node.is_control() {
            continue;
        }
        if result.per_node.get(&id) != Some(&NodeStatus::Failure) {
            return Err(BtError::Structural(format!("last visited leaf {id} did not fail")));
        }
        return Ok(match node.kind {
            NodeKind::Action(_) => FailedNode::Action(id),
            _ => FailedNode::Condition(id),
        });
    }
    Err(BtError::Structural("failing traversal visited no leaf".into()))
}

/// Condition leaves strictly before `target` in preorder.
pub fn higher_priority_nodes(tree: &BtNode, target: NodeId) -> Result<Vec<NodeId>, BtError> {
    let mut out = Vec::new();
    for n in tree.preorder() {
        if n.id == target {
            return Ok(out);
        }
        if let NodeKind::Condition(_) = n.kind {
            out.push(n.id);
        }
    }
    Err(BtError::NotFound(target))
}

/// Conditions that must already hold whenever a traversal reaches `target`.
///
/// Under every Sequence on the path from the root, each left sibling of the
/// path child has succeeded; a succeeded Fallback is only known to have its
/// first child hold if that child is a condition, and a succeeded Sequence has
/// every child hold. Left siblings under a Fallback have failed and add
/// nothing.
pub fn guard_conditions(tree: &BtNode, target: NodeId) -> Result<Vec<NodeId>, BtError> {
    let path = tree.path_to(target).ok_or(BtError::NotFound(target))?;
    let mut out = Vec::new();
    let mut node = tree;
    for &i in &path {
        if let NodeKind::Sequence(children) = &node.kind {
            for left in &children[..i] {
                guard(left, &mut out);
            }
        }
        node = &node.children()[i];
    }
    Ok(out)
}

fn guard(node: &BtNode, out: &mut Vec<NodeId>) {
    match &node.kind {
        NodeKind::Condition(_) => out.push(node.id),
        NodeKind::Action(_) => {}
        NodeKind::Fallback(children) => guard(&children[0], out),
        NodeKind::Sequence(children) => children.iter().for_each(|c| guard(c, out)),
    }
}
