//! Reactive behavior-tree planning for pick-and-place tasks.
//!
//! Descriptive task steps are parsed into a goal tree (a sequence of
//! condition nodes). The planner ticks that tree against a simulated world
//! and, whenever a condition fails, grows the tree with a fallback over the
//! actions whose post-conditions achieve it.

pub mod atl;
pub mod bt;
pub mod map;
pub mod parser;
pub mod planner;
pub mod scenario;
pub mod sim;
pub mod trace;

pub use atl::{ActionInstance, ActionTemplate, ArgKind, AtlError, Library, Literal, PredicateRegistry};
pub use bt::{BtError, BtNode, NodeId, NodeKind, NodeStatus};
pub use map::{MapError, SemanticMap, WorldState};

#[cfg(test)]
pub(crate) mod testutil;
