use super::partition::{InfoPartition, InfosetId};
use super::tree::{GameTree, Label, NodeId};
use crate::{Error, Result};

/// Ordered (infoset, action) pairs along a history.
pub type XSequence = Vec<(InfosetId, Label)>;

/// Which players' decisions an X-sequence keeps.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PlayerFilter {
    Only(usize),
    AllBut(usize),
    All,
}

impl PlayerFilter {
    fn keeps(self, player: usize) -> bool {
        match self {
            PlayerFilter::Only(i) => player == i,
            PlayerFilter::AllBut(i) => player != i,
            PlayerFilter::All => true,
        }
    }
}

/// X(start, node) restricted by `filter`. Starts at the root when `start` is
/// `None`; a `start` that is not an ancestor of `node` yields the empty sequence.
pub fn x_sequence(
    tree: &GameTree,
    partition: &InfoPartition,
    node: NodeId,
    filter: PlayerFilter,
    start: Option<NodeId>,
) -> Result<XSequence> {
    if tree.get(node).is_none() {
        return Err(Error::UnknownNode(node));
    }
    let from = start.unwrap_or(NodeId::ROOT);
    if tree.get(from).is_none() {
        return Err(Error::UnknownNode(from));
    }
    if !tree.is_ancestor(from, node) {
        return Ok(Vec::new());
    }
    let from_depth = tree.node(from).depth as usize;
    Ok(tree
        .path(node)
        .into_iter()
        .skip(from_depth)
        .filter_map(|(h, a)| {
            let n = tree.node(h);
            let player = n.player()?;
            if !filter.keeps(player) {
                return None;
            }
            let iid = partition.infoset_of(h)?;
            Some((iid, n.actions()[a]))
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerfectRecall {
    pub holds: bool,
    /// Two members of one infoset whose owner's X-sequences differ.
    pub counterexample: Option<(NodeId, NodeId)>,
}

/// Definition of perfect recall: all members of each infoset share X_i.
pub fn is_perfect_recall(tree: &GameTree, partition: &InfoPartition) -> PerfectRecall {
    recall_check(tree, partition, None)
}

/// Perfect recall for one player's infosets only.
pub fn is_perfect_recall_for(tree: &GameTree, partition: &InfoPartition, player: usize) -> PerfectRecall {
    recall_check(tree, partition, Some(player))
}

fn recall_check(tree: &GameTree, partition: &InfoPartition, only: Option<usize>) -> PerfectRecall {
    for (_, set) in partition.infosets() {
        if only.is_some_and(|p| p != set.player) {
            continue;
        }
        let filter = PlayerFilter::Only(set.player);
        let Some((&first, rest)) = set.members.split_first() else {
            continue;
        };
        let base = x_sequence(tree, partition, first, filter, None).unwrap_or_default();
        for &m in rest {
            let x = x_sequence(tree, partition, m, filter, None).unwrap_or_default();
            if x != base {
                return PerfectRecall {
                    holds: false,
                    counterexample: Some((first, m)),
                };
            }
        }
    }
    PerfectRecall {
        holds: true,
        counterexample: None,
    }
}
