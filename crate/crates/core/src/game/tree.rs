use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_rational::Ratio;
use num_traits::{CheckedMul, One, ToPrimitive, Zero};

/// Exact chance probability supplied by a builder.
pub type Prob = Ratio<u64>;

/// Exact product of chance probabilities along a path.
pub type PathProb = Ratio<u128>;

/// Default tolerance for floating-point structural checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

static NEXT_TREE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn new(index: usize) -> Self {
        NodeId(u32::try_from(index).expect("node index overflows u32"))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Interned action label. Action identity across histories is by label.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(u32);

impl Label {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Decision {
        player: usize,
        actions: Vec<Label>,
    },
    Chance {
        actions: Vec<Label>,
        probs: Vec<f64>,
        /// Exact probabilities, when the builder knows them.
        exact: Option<Vec<Prob>>,
    },
    Terminal {
        utility: Vec<f64>,
    },
}

#[derive(Clone, Debug)]
pub struct Node {
    pub parent: Option<NodeId>,
    /// Label of the action leading here from the parent.
    pub incoming: Option<Label>,
    /// Position of that action among the parent's actions.
    pub incoming_index: u32,
    pub depth: u32,
    pub kind: NodeKind,
    pub children: Vec<NodeId>,
}

impl Node {
    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, NodeKind::Terminal { .. })
    }

    pub fn is_chance(&self) -> bool {
        matches!(self.kind, NodeKind::Chance { .. })
    }

    /// Acting player at a decision node.
    pub fn player(&self) -> Option<usize> {
        match self.kind {
            NodeKind::Decision { player, .. } => Some(player),
            _ => None,
        }
    }

    pub fn actions(&self) -> &[Label] {
        match &self.kind {
            NodeKind::Decision { actions, .. } | NodeKind::Chance { actions, .. } => actions,
            NodeKind::Terminal { .. } => &[],
        }
    }

    pub fn utility(&self) -> Option<&[f64]> {
        match &self.kind {
            NodeKind::Terminal { utility } => Some(utility),
            _ => None,
        }
    }
}

/// A structural invariant violation found by [`GameTree::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub node: Option<NodeId>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(n) => write!(f, "node {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Explicit extensive-form game tree stored in pre-order.
///
/// Node 0 is the root and every child has a larger index than its parent,
/// so forward passes iterate indices upward and backward passes downward.
#[derive(Clone, Debug)]
pub struct GameTree {
    id: u64,
    nodes: Vec<Node>,
    labels: Vec<String>,
    num_players: usize,
    zero_sum: bool,
    utility_range: Vec<f64>,
    tolerance: f64,
}

impl GameTree {
    /// Process-unique identity, used to reject partitions built over another tree.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn set_tolerance(&mut self, tolerance: f64) {
        self.tolerance = tolerance;
    }

    /// Δ_i: the spread of player `player`'s terminal utilities.
    pub fn utility_range(&self, player: usize) -> f64 {
        self.utility_range[player]
    }

    #[inline]
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn get(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.index())
    }

    pub fn nodes(&self) -> impl DoubleEndedIterator<Item = (NodeId, &Node)> + ExactSizeIterator {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId::new(i), n))
    }

    pub fn terminals(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(|(_, n)| n.is_terminal()).map(|(id, _)| id)
    }

    pub fn label(&self, label: Label) -> &str {
        &self.labels[label.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn find_label(&self, text: &str) -> Option<Label> {
        self.labels.iter().position(|l| l == text).map(|i| Label(i as u32))
    }

    /// True when `ancestor` is a (non-strict) prefix of `node`.
    pub fn is_ancestor(&self, ancestor: NodeId, node: NodeId) -> bool {
        let target_depth = self.node(ancestor).depth;
        let mut cur = node;
        while self.node(cur).depth > target_depth {
            match self.node(cur).parent {
                Some(p) => cur = p,
                None => return false,
            }
        }
        cur == ancestor
    }

    /// Root-to-node path as (node, index of the action taken there) pairs.
    /// The node itself is not included.
    pub fn path(&self, node: NodeId) -> Vec<(NodeId, usize)> {
        let mut out = Vec::with_capacity(self.node(node).depth as usize);
        let mut cur = node;
        while let Some(p) = self.node(cur).parent {
            out.push((p, self.node(cur).incoming_index as usize));
            cur = p;
        }
        out.reverse();
        out
    }

    /// The child reached by taking action `index` at `node`.
    #[inline]
    pub fn child(&self, node: NodeId, index: usize) -> NodeId {
        self.node(node).children[index]
    }

    /// Exact chance probability π_c(h), if every chance node on the path
    /// carries exact probabilities and the product fits.
    pub fn exact_chance_reach(&self, node: NodeId) -> Option<PathProb> {
        let mut acc = PathProb::one();
        for (n, a) in self.path(node) {
            if let NodeKind::Chance { exact, .. } = &self.node(n).kind {
                let p = exact.as_ref()?[a];
                let p = PathProb::new(u128::from(*p.numer()), u128::from(*p.denom()));
                acc = acc.checked_mul(&p)?;
            }
        }
        Some(acc)
    }

    /// Floating-point chance probability π_c(h).
    pub fn chance_reach(&self, node: NodeId) -> f64 {
        self.path(node)
            .into_iter()
            .filter_map(|(n, a)| match &self.node(n).kind {
                NodeKind::Chance { probs, .. } => Some(probs[a]),
                _ => None,
            })
            .product()
    }

    /// Check every structural invariant; an empty report means the tree is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let tol = self.tolerance;
        let mut push = |node: Option<NodeId>, message: String| out.push(Violation { node, message });

        if self.nodes.is_empty() {
            push(None, "tree has no nodes".into());
            return out;
        }
        if self.num_players == 0 {
            push(None, "game needs at least one player".into());
        }
        for (id, node) in self.nodes() {
            match node.parent {
                None if id != NodeId::ROOT => push(Some(id), "second root".into()),
                Some(_) if id == NodeId::ROOT => push(Some(id), "root has a parent".into()),
                Some(p) if p >= id => push(Some(id), "parent does not precede child".into()),
                _ => {}
            }
            for (k, &c) in node.children.iter().enumerate() {
                let child = self.node(c);
                if child.parent != Some(id) || child.incoming_index as usize != k {
                    push(Some(c), format!("child link from {id} is inconsistent"));
                }
                if let Some(&label) = node.actions().get(k) {
                    if child.incoming != Some(label) {
                        push(Some(c), "incoming label differs from parent's action".into());
                    }
                }
            }
            match &node.kind {
                NodeKind::Terminal { utility } => {
                    if !node.children.is_empty() {
                        push(Some(id), "terminal has children".into());
                    }
                    if utility.len() != self.num_players {
                        push(
                            Some(id),
                            format!(
                                "utility vector has {} entries for {} players",
                                utility.len(),
                                self.num_players
                            ),
                        );
                    }
                    if utility.iter().any(|u| !u.is_finite()) {
                        push(Some(id), "utility is not finite".into());
                    }
                    if self.zero_sum {
                        let s: f64 = utility.iter().sum();
                        if s.abs() > tol {
                            push(Some(id), format!("utilities sum to {} in a zero-sum game", compact(s)));
                        }
                    }
                }
                NodeKind::Decision { player, actions } => {
                    if *player >= self.num_players {
                        push(Some(id), format!("player {player} out of range"));
                    }
                    if actions.len() < 2 {
                        push(
                            Some(id),
                            format!("decision node has {} action(s), needs at least 2", actions.len()),
                        );
                    }
                    if has_duplicates(actions) {
                        push(Some(id), "duplicate action labels".into());
                    }
                    if node.children.len() != actions.len() {
                        push(Some(id), "child count differs from action count".into());
                    }
                }
                NodeKind::Chance { actions, probs, exact } => {
                    if actions.is_empty() {
                        push(Some(id), "chance node without outcomes".into());
                    }
                    if has_duplicates(actions) {
                        push(Some(id), "duplicate outcome labels".into());
                    }
                    if probs.len() != actions.len() || node.children.len() != actions.len() {
                        push(Some(id), "outcome, probability and child counts differ".into());
                    }
                    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                        push(Some(id), format!("probability {} outside [0,1]", compact(*p)));
                    }
                    let s: f64 = probs.iter().sum();
                    if (s - 1.0).abs() > tol {
                        push(Some(id), format!("probabilities sum to {}", compact(s)));
                    }
                    if let Some(exact) = exact {
                        let total = exact.iter().fold(Prob::zero(), |acc, p| acc + p);
                        if exact.len() != probs.len() || !total.is_one() {
                            push(Some(id), "exact probabilities do not sum to 1".into());
                        }
                        for (e, &f) in exact.iter().zip(probs) {
                            if (e.to_f64().unwrap_or(f64::NAN) - f).abs() > tol {
                                push(Some(id), "exact and floating probabilities disagree".into());
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Validate and turn the report into an error.
    pub fn ensure_valid(&self) -> crate::Result<()> {
        let report = self.validate();
        if report.is_empty() {
            Ok(())
        } else {
            let msg = report
                .iter()
                .take(5)
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            Err(crate::Error::InvalidTree(msg))
        }
    }
}

fn has_duplicates(labels: &[Label]) -> bool {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Short decimal rendering: `1.1` rather than `1.0999999999999999`.
pub(crate) fn compact(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Incremental tree construction in pre-order.
///
/// Children must be added in the order of their parent's action list, and a
/// node's whole subtree must be added before its next sibling.
#[derive(Debug)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
    labels: Vec<String>,
    label_index: HashMap<String, Label>,
    num_players: usize,
    zero_sum: bool,
}

impl TreeBuilder {
    pub fn new(num_players: usize) -> Self {
        TreeBuilder {
            nodes: Vec::new(),
            labels: Vec::new(),
            label_index: HashMap::new(),
            num_players,
            zero_sum: false,
        }
    }

    /// Mark the game zero-sum; validation then checks Σ_i u_i(z) = 0.
    pub fn zero_sum(mut self, zero_sum: bool) -> Self {
        self.zero_sum = zero_sum;
        self
    }

    pub fn label(&mut self, text: &str) -> Label {
        if let Some(&l) = self.label_index.get(text) {
            return l;
        }
        let l = Label(self.labels.len() as u32);
        self.labels.push(text.to_string());
        self.label_index.insert(text.to_string(), l);
        l
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_kind(&self, id: NodeId) -> &NodeKind {
        &self.nodes[id.index()].kind
    }

    pub fn child_count(&self, id: NodeId) -> usize {
        self.nodes[id.index()].children.len()
    }

    /// Add a node. `parent` is `None` only for the root; otherwise the action
    /// leading here is the parent's next unused action.
    pub fn add(&mut self, parent: Option<NodeId>, kind: NodeKind) -> NodeId {
        let id = NodeId::new(self.nodes.len());
        let (incoming, incoming_index, depth) = match parent {
            None => (None, 0, 0),
            Some(p) => {
                let pn = &self.nodes[p.index()];
                let k = pn.children.len();
                (pn.actions().get(k).copied(), k as u32, pn.depth + 1)
            }
        };
        self.nodes.push(Node {
            parent,
            incoming,
            incoming_index,
            depth,
            kind,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            self.nodes[p.index()].children.push(id);
        }
        id
    }

    pub fn decision(&mut self, parent: Option<NodeId>, player: usize, actions: &[&str]) -> NodeId {
        let actions = actions.iter().map(|a| self.label(a)).collect();
        self.add(parent, NodeKind::Decision { player, actions })
    }

    /// Chance node with exact probabilities.
    pub fn chance(&mut self, parent: Option<NodeId>, outcomes: &[(&str, Prob)]) -> NodeId {
        let actions = outcomes.iter().map(|(a, _)| self.label(a)).collect();
        let exact: Vec<Prob> = outcomes.iter().map(|(_, p)| *p).collect();
        let probs = exact.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect();
        self.add(
            parent,
            NodeKind::Chance {
                actions,
                probs,
                exact: Some(exact),
            },
        )
    }

    /// Chance node with floating-point probabilities only.
    pub fn chance_f64(&mut self, parent: Option<NodeId>, outcomes: &[(&str, f64)]) -> NodeId {
        let actions = outcomes.iter().map(|(a, _)| self.label(a)).collect();
        let probs = outcomes.iter().map(|(_, p)| *p).collect();
        self.add(
            parent,
            NodeKind::Chance {
                actions,
                probs,
                exact: None,
            },
        )
    }

    pub fn terminal(&mut self, parent: Option<NodeId>, utility: Vec<f64>) -> NodeId {
        self.add(parent, NodeKind::Terminal { utility })
    }

    /// Finish construction. The result is not validated; call
    /// [`GameTree::validate`] or [`GameTree::ensure_valid`].
    pub fn finish(self) -> GameTree {
        let mut lo = vec![f64::INFINITY; self.num_players];
        let mut hi = vec![f64::NEG_INFINITY; self.num_players];
        for n in &self.nodes {
            if let NodeKind::Terminal { utility } = &n.kind {
                for (p, &u) in utility.iter().enumerate().take(self.num_players) {
                    lo[p] = lo[p].min(u);
                    hi[p] = hi[p].max(u);
                }
            }
        }
        let utility_range = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| if h >= l { h - l } else { 0.0 })
            .collect();
        GameTree {
            id: NEXT_TREE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: self.nodes,
            labels: self.labels,
            num_players: self.num_players,
            zero_sum: self.zero_sum,
            utility_range,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_terminal_is_valid() {
        let mut b = TreeBuilder::new(2).zero_sum(true);
        b.terminal(None, vec![0.0, 0.0]);
        let tree = b.finish();
        assert!(tree.validate().is_empty());
        assert_eq!(tree.utility_range(0), 0.0);
    }

    #[test]
    fn chance_probabilities_must_sum_to_one() {
        let mut b = TreeBuilder::new(1);
        let root = b.chance_f64(None, &[("a", 0.5), ("b", 0.6)]);
        b.terminal(Some(root), vec![1.0]);
        b.terminal(Some(root), vec![2.0]);
        let report = b.finish().validate();
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].message, "probabilities sum to 1.1");
    }

    #[test]
    fn decision_needs_two_distinct_actions() {
        let mut b = TreeBuilder::new(1);
        let root = b.decision(None, 0, &["x", "x"]);
        b.terminal(Some(root), vec![1.0]);
        b.terminal(Some(root), vec![2.0]);
        let report = b.finish().validate();
        assert!(report.iter().any(|v| v.message.contains("duplicate")));

        let mut b = TreeBuilder::new(1);
        let root = b.decision(None, 0, &["only"]);
        b.terminal(Some(root), vec![1.0]);
        let report = b.finish().validate();
        assert!(report.iter().any(|v| v.message.contains("at least 2")));
    }

    #[test]
    fn zero_sum_flag_is_checked() {
        let mut b = TreeBuilder::new(2).zero_sum(true);
        b.terminal(None, vec![1.0, 0.5]);
        let report = b.finish().validate();
        assert!(report[0].message.contains("zero-sum"));
    }

    #[test]
    fn utility_vector_length() {
        let mut b = TreeBuilder::new(2);
        b.terminal(None, vec![1.0]);
        assert!(!b.finish().validate().is_empty());
    }

    #[test]
    fn ancestry_and_paths() {
        let mut b = TreeBuilder::new(1);
        let root = b.decision(None, 0, &["l", "r"]);
        let l = b.decision(Some(root), 0, &["a", "b"]);
        let la = b.terminal(Some(l), vec![1.0]);
        b.terminal(Some(l), vec![2.0]);
        let r = b.terminal(Some(root), vec![3.0]);
        let tree = b.finish();
        assert!(tree.validate().is_empty());
        assert!(tree.is_ancestor(root, la));
        assert!(tree.is_ancestor(la, la));
        assert!(!tree.is_ancestor(r, la));
        assert_eq!(tree.path(la), vec![(root, 0), (l, 0)]);
        assert_eq!(tree.utility_range(0), 2.0);
    }

    #[test]
    fn exact_chance_reach_multiplies() {
        let half = Prob::new(1, 2);
        let mut b = TreeBuilder::new(1);
        let root = b.chance(None, &[("h", half), ("t", half)]);
        let c = b.chance(Some(root), &[("h", Prob::new(1, 3)), ("t", Prob::new(2, 3))]);
        let z = b.terminal(Some(c), vec![0.0]);
        b.terminal(Some(c), vec![0.0]);
        b.terminal(Some(root), vec![0.0]);
        let tree = b.finish();
        assert!(tree.validate().is_empty());
        assert_eq!(tree.exact_chance_reach(z), Some(PathProb::new(1, 6)));
        assert!((tree.chance_reach(z) - 1.0 / 6.0).abs() < 1e-15);
    }
}
