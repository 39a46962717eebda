use std::collections::HashMap;
use std::fmt;

use super::tree::{GameTree, Label, NodeId, Violation};
use crate::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfosetId(u32);

impl InfosetId {
    pub fn new(index: usize) -> Self {
        InfosetId(u32::try_from(index).expect("infoset index overflows u32"))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for InfosetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub struct Infoset {
    pub player: usize,
    pub actions: Vec<Label>,
    /// Member decision nodes in pre-order.
    pub members: Vec<NodeId>,
    /// Human-readable key, unique within the partition.
    pub key: String,
}

/// Information partition for every player of one game view.
///
/// Infoset ids are dense and assigned in pre-order of first member, so two
/// builds of the same game produce identical ids.
#[derive(Clone, Debug)]
pub struct InfoPartition {
    tree_id: u64,
    name: String,
    assignment: Vec<Option<InfosetId>>,
    infosets: Vec<Infoset>,
}

impl InfoPartition {
    /// Group decision nodes by `(player, key(node))`.
    pub fn from_keys<F>(tree: &GameTree, name: &str, mut key: F) -> Self
    where
        F: FnMut(NodeId) -> String,
    {
        let mut index: HashMap<(usize, String), InfosetId> = HashMap::new();
        let mut assignment = vec![None; tree.len()];
        let mut infosets: Vec<Infoset> = Vec::new();
        for (id, node) in tree.nodes() {
            let Some(player) = node.player() else { continue };
            let k = key(id);
            let iid = *index.entry((player, k.clone())).or_insert_with(|| {
                infosets.push(Infoset {
                    player,
                    actions: node.actions().to_vec(),
                    members: Vec::new(),
                    key: k,
                });
                InfosetId::new(infosets.len() - 1)
            });
            infosets[iid.index()].members.push(id);
            assignment[id.index()] = Some(iid);
        }
        InfoPartition {
            tree_id: tree.id(),
            name: name.to_string(),
            assignment,
            infosets,
        }
    }

    /// Perfect-information partition: every decision node is its own infoset.
    pub fn singletons(tree: &GameTree) -> Self {
        Self::from_keys(tree, "singletons", |n| format!("n{n}"))
    }

    /// Build from an explicit per-node group number. Nodes sharing a number
    /// (and player) share an infoset. Non-decision nodes must map to `None`.
    pub fn from_groups(tree: &GameTree, name: &str, groups: &[Option<usize>]) -> Result<Self> {
        if groups.len() != tree.len() {
            return Err(Error::InvalidPartition(format!(
                "{} group entries for {} nodes",
                groups.len(),
                tree.len()
            )));
        }
        for (id, node) in tree.nodes() {
            if node.player().is_some() != groups[id.index()].is_some() {
                return Err(Error::InvalidPartition(format!(
                    "node {id}: decision nodes need a group and other nodes must have none"
                )));
            }
        }
        Ok(Self::from_keys(tree, name, |n| {
            format!("g{}", groups[n.index()].unwrap_or(0))
        }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tree_id(&self) -> u64 {
        self.tree_id
    }

    pub fn belongs_to(&self, tree: &GameTree) -> bool {
        self.tree_id == tree.id()
    }

    pub fn len(&self) -> usize {
        self.infosets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.infosets.is_empty()
    }

    #[inline]
    pub fn infoset_of(&self, node: NodeId) -> Option<InfosetId> {
        self.assignment.get(node.index()).copied().flatten()
    }

    #[inline]
    pub fn infoset(&self, id: InfosetId) -> &Infoset {
        &self.infosets[id.index()]
    }

    pub fn get(&self, id: InfosetId) -> Option<&Infoset> {
        self.infosets.get(id.index())
    }

    pub fn infosets(&self) -> impl ExactSizeIterator<Item = (InfosetId, &Infoset)> {
        self.infosets.iter().enumerate().map(|(i, s)| (InfosetId::new(i), s))
    }

    pub fn player_infosets(&self, player: usize) -> impl Iterator<Item = (InfosetId, &Infoset)> {
        self.infosets().filter(move |(_, s)| s.player == player)
    }

    pub fn find_key(&self, player: usize, key: &str) -> Option<InfosetId> {
        self.infosets()
            .find(|(_, s)| s.player == player && s.key == key)
            .map(|(id, _)| id)
    }

    /// |A| = Σ_I |A(I)| over all players.
    pub fn count_infoset_actions(&self) -> usize {
        self.infosets.iter().map(|s| s.actions.len()).sum()
    }

    /// max_I |A(I)| over player `player`'s infosets.
    pub fn max_actions(&self, player: usize) -> usize {
        self.player_infosets(player)
            .map(|(_, s)| s.actions.len())
            .max()
            .unwrap_or(0)
    }

    /// Check action alignment, ownership and the no-revisit condition.
    pub fn validate(&self, tree: &GameTree) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.belongs_to(tree) {
            out.push(Violation {
                node: None,
                message: "partition was built over a different tree".into(),
            });
            return out;
        }
        for (id, node) in tree.nodes() {
            let assigned = self.infoset_of(id);
            match (node.player(), assigned) {
                (Some(_), None) => out.push(Violation {
                    node: Some(id),
                    message: "decision node without infoset".into(),
                }),
                (None, Some(_)) => out.push(Violation {
                    node: Some(id),
                    message: "non-decision node assigned to an infoset".into(),
                }),
                _ => {}
            }
        }
        for (iid, set) in self.infosets() {
            for &m in &set.members {
                let node = tree.node(m);
                if node.player() != Some(set.player) {
                    out.push(Violation {
                        node: Some(m),
                        message: format!("infoset {} mixes players", set.key),
                    });
                }
                if node.actions() != set.actions.as_slice() {
                    out.push(Violation {
                        node: Some(m),
                        message: format!("infoset {} has misaligned actions", set.key),
                    });
                }
                let mut cur = node.parent;
                while let Some(p) = cur {
                    if self.infoset_of(p) == Some(iid) {
                        out.push(Violation {
                            node: Some(m),
                            message: format!("infoset {} is reached twice on one path", set.key),
                        });
                        break;
                    }
                    cur = tree.node(p).parent;
                }
            }
        }
        out
    }

    pub fn ensure_valid(&self, tree: &GameTree) -> Result<()> {
        let report = self.validate(tree);
        if report.is_empty() {
            Ok(())
        } else {
            let msg = report
                .iter()
                .take(5)
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::InvalidPartition(format!("{}: {msg}", self.name)))
        }
    }
}
