use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::BtError;
use crate::atl::{ActionInstance, Literal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Success,
    Failure,
    Running,
}

impl fmt::Display for NodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeStatus::Success => "Success",
            NodeStatus::Failure => "Failure",
            NodeStatus::Running => "Running",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Sequence(Vec<BtNode>),
    Fallback(Vec<BtNode>),
    Condition(Literal),
    Action(ActionInstance),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BtNode {
    pub id: NodeId,
    pub kind: NodeKind,
}

impl BtNode {
    pub fn sequence(id: u32, children: Vec<BtNode>) -> Self {
        BtNode {
            id: NodeId(id),
            kind: NodeKind::Sequence(children),
        }
    }

    pub fn fallback(id: u32, children: Vec<BtNode>) -> Self {
        BtNode {
            id: NodeId(id),
            kind: NodeKind::Fallback(children),
        }
    }

    pub fn condition(id: u32, literal: Literal) -> Self {
        BtNode {
            id: NodeId(id),
            kind: NodeKind::Condition(literal),
        }
    }

    pub fn action(id: u32, instance: ActionInstance) -> Self {
        BtNode {
            id: NodeId(id),
            kind: NodeKind::Action(instance),
        }
    }

    pub fn children(&self) -> &[BtNode] {
        match &self.kind {
            NodeKind::Sequence(c) | NodeKind::Fallback(c) => c,
            _ => &[],
        }
    }

    pub(crate) fn children_mut(&mut self) -> Option<&mut Vec<BtNode>> {
        match &mut self.kind {
            NodeKind::Sequence(c) | NodeKind::Fallback(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_control(&self) -> bool {
        matches!(self.kind, NodeKind::Sequence(_) | NodeKind::Fallback(_))
    }

    pub fn literal(&self) -> Option<&Literal> {
        match &self.kind {
            NodeKind::Condition(l) => Some(l),
            _ => None,
        }
    }

    /// Depth-first preorder.
    pub fn preorder(&self) -> Vec<&BtNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children().iter().rev());
        }
        out
    }

    pub fn find(&self, id: NodeId) -> Option<&BtNode> {
        self.preorder().into_iter().find(|n| n.id == id)
    }

    pub fn ids(&self) -> Vec<NodeId> {
        self.preorder().into_iter().map(|n| n.id).collect()
    }

    pub fn max_id(&self) -> u32 {
        self.preorder().into_iter().map(|n| n.id.0).max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        self.preorder().len()
    }

    /// Child indices leading from `self` to `id`.
    pub fn path_to(&self, id: NodeId) -> Option<Vec<usize>> {
        if self.id == id {
            return Some(Vec::new());
        }
        for (i, c) in self.children().iter().enumerate() {
            if let Some(mut rest) = c.path_to(id) {
                rest.insert(0, i);
                return Some(rest);
            }
        }
        None
    }

    pub fn at_path(&self, path: &[usize]) -> &BtNode {
        path.iter().fold(self, |n, &i| &n.children()[i])
    }

    pub(crate) fn at_path_mut(&mut self, path: &[usize]) -> &mut BtNode {
        let mut n = self;
        for &i in path {
            n = &mut n.children_mut().expect("path runs through control nodes")[i];
        }
        n
    }

    /// Control nodes have children and ids are unique.
    pub fn validate(&self) -> Result<(), BtError> {
        let mut seen = BTreeSet::new();
        for n in self.preorder() {
            if !seen.insert(n.id) {
                return Err(BtError::Structural(format!("duplicate node id {}", n.id)));
            }
            if n.is_control() && n.children().is_empty() {
                return Err(BtError::Structural(format!("control node {} has no children", n.id)));
            }
        }
        Ok(())
    }
}
