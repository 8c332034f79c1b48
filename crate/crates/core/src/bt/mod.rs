//! Behavior trees: node structure, memoryless tick semantics, failure
//! localization and the two surgery primitives the planner uses to grow a
//! tree.

mod node;
mod surgery;
mod text;
mod tick;

use thiserror::Error;

pub use node::{BtNode, NodeId, NodeKind, NodeStatus};
pub use surgery::{add_before, replace};
pub use text::{deserialize_bt, serialize_bt};
pub use tick::{
    get_failed_node, guard_conditions, higher_priority_nodes, tick, ActionRunner, ConditionEvaluator, FailedNode,
    TickResult,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BtError {
    #[error("malformed tree: {0}")]
    Structural(String),
    #[error("vocabulary error: {0}")]
    Vocabulary(String),
    #[error("node {0} not found")]
    NotFound(NodeId),
    #[error("root did not fail")]
    NotFailed,
    #[error("bt text {line}:{column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}
