use std::collections::BTreeSet;

use super::{BtError, BtNode, NodeId, NodeKind};

fn check_disjoint(tree: &BtNode, skip: Option<NodeId>, subtree: &BtNode) -> Result<(), BtError> {
    let mut ids = BTreeSet::new();
    let mut stack = vec![tree];
    while let Some(n) = stack.pop() {
        if Some(n.id) == skip {
            continue;
        }
        ids.insert(n.id);
        stack.extend(n.children());
    }
    if let Some(clash) = subtree.ids().into_iter().find(|i| ids.contains(i)) {
        return Err(BtError::Structural(format!("node id {clash} already in tree")));
    }
    Ok(())
}

/// `tree` with the node `target` swapped for `subtree`.
pub fn replace(tree: &BtNode, target: NodeId, subtree: BtNode) -> Result<BtNode, BtError> {
    subtree.validate()?;
    let path = tree.path_to(target).ok_or(BtError::NotFound(target))?;
    check_disjoint(tree, Some(target), &subtree)?;
    let mut out = tree.clone();
    *out.at_path_mut(&path) = subtree;
    Ok(out)
}

/// Inserts `subtree` as a prerequisite of the earliest conflict node.
///
/// From that node the anchor climbs through Fallback parents to the first
/// node whose parent is a Sequence; `subtree` becomes the sibling right
/// before the anchor. With no Sequence above, the tree is wrapped in a new
/// Sequence root `[subtree, tree]`.
pub fn add_before(tree: &BtNode, conflict_ids: &BTreeSet<NodeId>, subtree: BtNode) -> Result<BtNode, BtError> {
    if conflict_ids.is_empty() {
        return Err(BtError::Structural("add_before needs at least one conflict node".into()));
    }
    subtree.validate()?;
    if let Some(missing) = conflict_ids.iter().find(|id| tree.find(**id).is_none()) {
        return Err(BtError::NotFound(*missing));
    }
    check_disjoint(tree, None, &subtree)?;
    let first = tree
        .preorder()
        .into_iter()
        .map(|n| n.id)
        .find(|id| conflict_ids.contains(id))
        .expect("checked present");
    let mut path = tree.path_to(first).expect("present");
    while let Some((&index, parent_path)) = path.split_last() {
        match tree.at_path(parent_path).kind {
            NodeKind::Sequence(_) => {
                let mut out = tree.clone();
                out.at_path_mut(parent_path)
                    .children_mut()
                    .expect("sequence")
                    .insert(index, subtree);
                return Ok(out);
            }
            _ => path.pop(),
        };
    }
    let id = tree.max_id().max(subtree.max_id()) + 1;
    Ok(BtNode::sequence(id, vec![subtree, tree.clone()]))
}
