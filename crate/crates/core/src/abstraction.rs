//! Refinement relations between an abstract partition and a perfect-recall
//! refinement over the same tree.

use crate::game::{is_perfect_recall, GameTree, InfoPartition, InfosetId, NodeId};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractionCheck {
    pub holds: bool,
    /// Two nodes sharing a fine infoset but not a coarse one.
    pub counterexample: Option<(NodeId, NodeId)>,
}

/// Whether `coarse` is an abstraction of `fine`: nodes that share a fine
/// infoset also share a coarse one.
pub fn is_abstraction(tree: &GameTree, coarse: &InfoPartition, fine: &InfoPartition) -> Result<AbstractionCheck> {
    if !coarse.belongs_to(tree) || !fine.belongs_to(tree) {
        return Err(Error::DifferentTrees);
    }
    for (_, set) in fine.infosets() {
        let Some((&first, rest)) = set.members.split_first() else {
            continue;
        };
        let c = coarse.infoset_of(first);
        if let Some(&m) = rest.iter().find(|&&m| coarse.infoset_of(m) != c) {
            return Ok(AbstractionCheck {
                holds: false,
                counterexample: Some((first, m)),
            });
        }
    }
    Ok(AbstractionCheck {
        holds: true,
        counterexample: None,
    })
}

/// A coarse partition together with a perfect-recall refinement, exposing the
/// groups P̆(I) of fine infosets inside each coarse infoset.
#[derive(Clone, Debug)]
pub struct RefinementMap<'a> {
    tree: &'a GameTree,
    coarse: &'a InfoPartition,
    fine: &'a InfoPartition,
    parent: Vec<InfosetId>,
    groups: Vec<Vec<InfosetId>>,
}

pub fn make_refinement<'a>(
    tree: &'a GameTree,
    coarse: &'a InfoPartition,
    fine: &'a InfoPartition,
) -> Result<RefinementMap<'a>> {
    if !coarse.belongs_to(tree) || !fine.belongs_to(tree) {
        return Err(Error::DifferentTrees);
    }
    coarse.ensure_valid(tree)?;
    fine.ensure_valid(tree)?;
    let check = is_abstraction(tree, coarse, fine)?;
    if let Some((a, b)) = check.counterexample {
        return Err(Error::Precondition(format!(
            "abstraction: nodes {a} and {b} share a fine infoset but not a coarse one"
        )));
    }
    let pr = is_perfect_recall(tree, fine);
    if !pr.holds {
        let player = pr.counterexample.and_then(|(a, _)| tree.node(a).player()).unwrap_or(0);
        return Err(Error::NotPerfectRecall {
            player,
            partition: fine.name().to_string(),
        });
    }
    let mut parent = Vec::with_capacity(fine.len());
    let mut groups = vec![Vec::new(); coarse.len()];
    for (fid, set) in fine.infosets() {
        let c = coarse
            .infoset_of(set.members[0])
            .expect("validated partitions cover decision nodes");
        parent.push(c);
        groups[c.index()].push(fid);
    }
    Ok(RefinementMap {
        tree,
        coarse,
        fine,
        parent,
        groups,
    })
}

impl<'a> RefinementMap<'a> {
    pub fn tree(&self) -> &'a GameTree {
        self.tree
    }

    pub fn coarse(&self) -> &'a InfoPartition {
        self.coarse
    }

    pub fn fine(&self) -> &'a InfoPartition {
        self.fine
    }

    /// P̆(I): fine infosets inside coarse infoset `coarse`, ascending.
    pub fn group(&self, coarse: InfosetId) -> &[InfosetId] {
        &self.groups[coarse.index()]
    }

    /// The coarse infoset containing fine infoset `fine`.
    pub fn coarse_of(&self, fine: InfosetId) -> InfosetId {
        self.parent[fine.index()]
    }

    pub fn groups(&self) -> impl Iterator<Item = (InfosetId, &[InfosetId])> {
        self.groups
            .iter()
            .enumerate()
            .map(|(i, g)| (InfosetId::new(i), g.as_slice()))
    }

    /// Coarse infosets with more than one fine member.
    pub fn merged(&self) -> impl Iterator<Item = (InfosetId, &[InfosetId])> {
        self.groups().filter(|(_, g)| g.len() > 1)
    }
}

/// Z_I: every terminal below a member of `infoset`, paired with that member
/// z[I]. Ordered by member, then pre-order.
pub fn terminal_fiber(tree: &GameTree, partition: &InfoPartition, infoset: InfosetId) -> Result<Vec<(NodeId, NodeId)>> {
    let set = partition.get(infoset).ok_or(Error::UnknownInfoset(infoset))?;
    let mut out = Vec::new();
    for &h in &set.members {
        let mut stack = vec![h];
        let mut below = Vec::new();
        while let Some(n) = stack.pop() {
            let node = tree.node(n);
            if node.is_terminal() {
                below.push(n);
            }
            stack.extend(node.children.iter().rev());
        }
        out.extend(below.into_iter().map(|z| (z, h)));
    }
    Ok(out)
}
