use super::partition::{InfoPartition, InfosetId};
use super::tree::{GameTree, NodeId, NodeKind};
use crate::{Error, Result};

/// Behavioral strategy profile: one distribution per infoset of a partition,
/// stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    offsets: Vec<usize>,
    probs: Vec<f64>,
}

impl Profile {
    pub fn uniform(partition: &InfoPartition) -> Self {
        let mut offsets = Vec::with_capacity(partition.len() + 1);
        let mut probs = Vec::new();
        offsets.push(0);
        for (_, set) in partition.infosets() {
            let n = set.actions.len();
            probs.extend(std::iter::repeat_n(1.0 / n as f64, n));
            offsets.push(probs.len());
        }
        Profile { offsets, probs }
    }

    /// Profile with the same layout as `partition`, filled by `f(infoset, out)`.
    pub fn from_fn<F>(partition: &InfoPartition, mut f: F) -> Self
    where
        F: FnMut(InfosetId, &mut [f64]),
    {
        let mut p = Self::uniform(partition);
        for i in 0..partition.len() {
            f(InfosetId::new(i), p.get_mut(InfosetId::new(i)));
        }
        p
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, infoset: InfosetId) -> &[f64] {
        let i = infoset.index();
        &self.probs[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn get_mut(&mut self, infoset: InfosetId) -> &mut [f64] {
        let i = infoset.index();
        &mut self.probs[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Offset of an infoset's first action in the flat layout.
    #[inline]
    pub fn offset(&self, infoset: InfosetId) -> usize {
        self.offsets[infoset.index()]
    }

    pub fn flat(&self) -> &[f64] {
        &self.probs
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.probs
    }

    /// Largest componentwise difference between two same-layout profiles.
    pub fn max_abs_diff(&self, other: &Profile) -> f64 {
        assert_eq!(self.offsets, other.offsets, "profiles have different layouts");
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Each distribution is nonnegative and sums to 1 within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        (0..self.len()).all(|i| {
            let d = self.get(InfosetId::new(i));
            d.iter().all(|&p| p >= -tol) && (d.iter().sum::<f64>() - 1.0).abs() <= tol
        })
    }

    /// Whether the layout has one distribution of the right width per infoset.
    pub fn matches(&self, partition: &InfoPartition) -> bool {
        self.len() == partition.len() && partition.infosets().all(|(i, s)| self.get(i).len() == s.actions.len())
    }
}

/// Whose action probabilities enter a reach product.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Who {
    Player(usize),
    AllBut(usize),
    All,
    Chance,
}

/// π^σ(from, node) for the selected actors. `from` defaults to the root and
/// must be an ancestor of `node`.
pub fn reach_probability(
    tree: &GameTree,
    partition: &InfoPartition,
    profile: &Profile,
    node: NodeId,
    who: Who,
    from: Option<NodeId>,
) -> Result<f64> {
    if tree.get(node).is_none() {
        return Err(Error::UnknownNode(node));
    }
    let from = from.unwrap_or(NodeId::ROOT);
    if tree.get(from).is_none() {
        return Err(Error::UnknownNode(from));
    }
    if !tree.is_ancestor(from, node) {
        return Err(Error::NotAncestor { from, node });
    }
    if !profile.matches(partition) {
        return Err(Error::Precondition("profile layout does not match partition".into()));
    }
    let skip = tree.node(from).depth as usize;
    let mut p = 1.0;
    for (h, a) in tree.path(node).into_iter().skip(skip) {
        match &tree.node(h).kind {
            NodeKind::Chance { probs, .. } => {
                if matches!(who, Who::Chance | Who::All | Who::AllBut(_)) {
                    p *= probs[a];
                }
            }
            NodeKind::Decision { player, .. } => {
                let keep = match who {
                    Who::Player(i) => *player == i,
                    Who::AllBut(i) => *player != i,
                    Who::All => true,
                    Who::Chance => false,
                };
                if keep {
                    let iid = partition.infoset_of(h).ok_or(Error::UnknownNode(h))?;
                    p *= profile.get(iid)[a];
                }
            }
            NodeKind::Terminal { .. } => unreachable!("terminal on a path"),
        }
    }
    Ok(p)
}

/// π^σ(h) for every node, in one forward pass.
pub fn reach_all(tree: &GameTree, partition: &InfoPartition, profile: &Profile) -> Vec<f64> {
    let mut reach = vec![0.0; tree.len()];
    reach[0] = 1.0;
    for (id, node) in tree.nodes() {
        let r = reach[id.index()];
        match &node.kind {
            NodeKind::Chance { probs, .. } => {
                for (&c, &p) in node.children.iter().zip(probs) {
                    reach[c.index()] = r * p;
                }
            }
            NodeKind::Decision { .. } => {
                let iid = partition.infoset_of(id).expect("decision node without infoset");
                for (&c, &p) in node.children.iter().zip(profile.get(iid)) {
                    reach[c.index()] = r * p;
                }
            }
            NodeKind::Terminal { .. } => {}
        }
    }
    reach
}

/// u_i(σ) for every player.
pub fn expected_utilities(tree: &GameTree, partition: &InfoPartition, profile: &Profile) -> Vec<f64> {
    let reach = reach_all(tree, partition, profile);
    let mut out = vec![0.0; tree.num_players()];
    for (id, node) in tree.nodes() {
        if let Some(u) = node.utility() {
            for (o, &v) in out.iter_mut().zip(u) {
                *o += reach[id.index()] * v;
            }
        }
    }
    out
}

/// u_i(σ) = Σ_z u_i(z) π^σ(z).
pub fn expected_utility(tree: &GameTree, partition: &InfoPartition, profile: &Profile, player: usize) -> f64 {
    expected_utilities(tree, partition, profile)[player]
}
