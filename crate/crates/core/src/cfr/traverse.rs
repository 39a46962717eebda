use crate::game::{GameTree, InfoPartition, InfosetId, NodeKind, Profile};
use crate::{Error, Result};

pub(crate) const NO_SLOT: u32 = u32::MAX;

/// Per-node lookup tables for flat passes over a tree.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    /// Profile offset of the node's infoset, or `NO_SLOT`.
    pub slot: Vec<u32>,
    /// 1 / |I| for the node's infoset.
    pub inv_size: Vec<f64>,
    pub players: usize,
}

impl Layout {
    pub fn new(tree: &GameTree, partition: &InfoPartition) -> Self {
        let shape = Profile::uniform(partition);
        let mut slot = vec![NO_SLOT; tree.len()];
        let mut inv_size = vec![0.0; tree.len()];
        for (id, _) in tree.nodes() {
            if let Some(iid) = partition.infoset_of(id) {
                slot[id.index()] = shape.offset(iid) as u32;
                inv_size[id.index()] = 1.0 / partition.infoset(iid).members.len() as f64;
            }
        }
        Layout {
            slot,
            inv_size,
            players: tree.num_players(),
        }
    }
}

const TERMINAL: u8 = 0;
const CHANCE: u8 = 1;
const DECISION: u8 = 2;

/// Tree topology in flat arrays, for passes that touch every node.
#[derive(Clone, Debug)]
pub(crate) struct Flat {
    pub kind: Vec<u8>,
    pub player: Vec<u32>,
    /// Children of node h are `children[start[h]..start[h + 1]]`.
    pub start: Vec<u32>,
    pub children: Vec<u32>,
    /// Chance probability per child entry, 0 under decisions.
    pub probs: Vec<f64>,
    /// Rows of width `players`, zero off terminals.
    pub utility: Vec<f64>,
    pub decisions: Vec<u32>,
    pub players: usize,
}

impl Flat {
    pub fn new(tree: &GameTree) -> Self {
        let n = tree.len();
        let np = tree.num_players();
        let mut f = Flat {
            kind: Vec::with_capacity(n),
            player: Vec::with_capacity(n),
            start: Vec::with_capacity(n + 1),
            children: Vec::with_capacity(n),
            probs: Vec::with_capacity(n),
            utility: vec![0.0; n * np],
            decisions: Vec::new(),
            players: np,
        };
        for (id, node) in tree.nodes() {
            let h = id.index();
            f.start.push(f.children.len() as u32);
            f.children.extend(node.children.iter().map(|c| c.index() as u32));
            match &node.kind {
                NodeKind::Terminal { utility } => {
                    f.kind.push(TERMINAL);
                    f.player.push(0);
                    f.utility[h * np..h * np + np].copy_from_slice(utility);
                }
                NodeKind::Chance { probs, .. } => {
                    f.kind.push(CHANCE);
                    f.player.push(np as u32);
                    f.probs.extend_from_slice(probs);
                }
                NodeKind::Decision { player, .. } => {
                    f.kind.push(DECISION);
                    f.player.push(*player as u32);
                    f.probs.extend(std::iter::repeat_n(0.0, node.children.len()));
                    f.decisions.push(h as u32);
                }
            }
        }
        f.start.push(f.children.len() as u32);
        f
    }

    pub fn len(&self) -> usize {
        self.kind.len()
    }

    #[inline]
    pub fn range(&self, h: usize) -> std::ops::Range<usize> {
        self.start[h] as usize..self.start[h + 1] as usize
    }

    #[inline]
    pub fn is_chance(&self, h: usize) -> bool {
        self.kind[h] == CHANCE
    }

    #[inline]
    pub fn is_terminal(&self, h: usize) -> bool {
        self.kind[h] == TERMINAL
    }
}

/// Reach rows of width `players + 1`; the last entry is chance.
pub(crate) fn forward(flat: &Flat, layout: &Layout, sigma: &[f64], reach: &mut Vec<f64>) {
    match flat.players {
        2 => forward_n::<3>(flat, layout, sigma, reach),
        1 => forward_n::<2>(flat, layout, sigma, reach),
        3 => forward_n::<4>(flat, layout, sigma, reach),
        _ => forward_dyn(flat, layout, sigma, reach),
    }
}

fn forward_n<const W: usize>(flat: &Flat, layout: &Layout, sigma: &[f64], reach: &mut Vec<f64>) {
    let n = flat.len();
    // Every row is written from its parent before it is read.
    reach.resize(n * W, 0.0);
    let rows: &mut [[f64; W]] = as_rows(reach);
    rows[0] = [1.0; W];
    for h in 0..n {
        let (chance, j) = match flat.kind[h] {
            TERMINAL => continue,
            CHANCE => (true, W - 1),
            _ => (false, flat.player[h] as usize),
        };
        let off = layout.slot[h] as usize;
        let parent = rows[h];
        let r = flat.range(h);
        for (k, (&c, &q)) in flat.children[r.clone()].iter().zip(&flat.probs[r]).enumerate() {
            let p = if chance { q } else { sigma[off + k] };
            let mut row = parent;
            row[j] *= p;
            rows[c as usize] = row;
        }
    }
}

fn as_rows<const W: usize>(v: &mut [f64]) -> &mut [[f64; W]] {
    let (rows, rest) = v.as_chunks_mut::<W>();
    debug_assert!(rest.is_empty());
    rows
}

fn forward_dyn(flat: &Flat, layout: &Layout, sigma: &[f64], reach: &mut Vec<f64>) {
    let w = flat.players + 1;
    reach.clear();
    reach.resize(flat.len() * w, 0.0);
    reach[..w].fill(1.0);
    for h in 0..flat.len() {
        let (chance, j) = match flat.kind[h] {
            TERMINAL => continue,
            CHANCE => (true, w - 1),
            _ => (false, flat.player[h] as usize),
        };
        let off = layout.slot[h] as usize;
        for (k, e) in flat.range(h).enumerate() {
            let c = flat.children[e] as usize;
            let p = if chance { flat.probs[e] } else { sigma[off + k] };
            reach.copy_within(h * w..h * w + w, c * w);
            reach[c * w + j] *= p;
        }
    }
}

/// Expected utility below each node under `sigma`, rows of width `players`.
pub(crate) fn backward(flat: &Flat, layout: &Layout, sigma: &[f64], values: &mut Vec<f64>) {
    match flat.players {
        2 => backward_n::<2>(flat, layout, sigma, values),
        1 => backward_n::<1>(flat, layout, sigma, values),
        3 => backward_n::<3>(flat, layout, sigma, values),
        _ => backward_dyn(flat, layout, sigma, values),
    }
}

fn backward_n<const W: usize>(flat: &Flat, layout: &Layout, sigma: &[f64], values: &mut Vec<f64>) {
    values.clear();
    values.extend_from_slice(&flat.utility);
    let rows: &mut [[f64; W]] = as_rows(values);
    for h in (0..flat.len()).rev() {
        let chance = match flat.kind[h] {
            TERMINAL => continue,
            CHANCE => true,
            _ => false,
        };
        let off = layout.slot[h] as usize;
        let r = flat.range(h);
        let mut acc = [0.0; W];
        for (k, (&c, &q)) in flat.children[r.clone()].iter().zip(&flat.probs[r]).enumerate() {
            let p = if chance { q } else { sigma[off + k] };
            let child = rows[c as usize];
            for j in 0..W {
                acc[j] += p * child[j];
            }
        }
        rows[h] = acc;
    }
}

fn backward_dyn(flat: &Flat, layout: &Layout, sigma: &[f64], values: &mut Vec<f64>) {
    let w = flat.players;
    values.clear();
    values.extend_from_slice(&flat.utility);
    for h in (0..flat.len()).rev() {
        let kind = flat.kind[h];
        if kind == TERMINAL {
            continue;
        }
        let off = layout.slot[h] as usize;
        for (k, e) in flat.range(h).enumerate() {
            let c = flat.children[e] as usize;
            let p = if kind == CHANCE { flat.probs[e] } else { sigma[off + k] };
            for j in 0..w {
                values[h * w + j] += p * values[c * w + j];
            }
        }
    }
}

fn check(tree: &GameTree, partition: &InfoPartition, profile: &Profile, infoset: InfosetId) -> Result<()> {
    if partition.get(infoset).is_none() {
        return Err(Error::UnknownInfoset(infoset));
    }
    if !partition.belongs_to(tree) {
        return Err(Error::DifferentTrees);
    }
    if profile.len() != partition.len() {
        return Err(Error::Precondition("profile layout does not match partition".into()));
    }
    Ok(())
}

/// v_i(σ_{I→a}, I) for every action a of `infoset`, where i owns the infoset.
pub fn counterfactual_action_values(
    tree: &GameTree,
    partition: &InfoPartition,
    profile: &Profile,
    infoset: InfosetId,
) -> Result<Vec<f64>> {
    check(tree, partition, profile, infoset)?;
    let layout = Layout::new(tree, partition);
    let flat = Flat::new(tree);
    let (mut reach, mut values) = (Vec::new(), Vec::new());
    forward(&flat, &layout, profile.flat(), &mut reach);
    backward(&flat, &layout, profile.flat(), &mut values);
    let set = partition.infoset(infoset);
    let i = set.player;
    let (w, wv) = (layout.players + 1, layout.players);
    let mut out = vec![0.0; set.actions.len()];
    for &h in &set.members {
        let row = &reach[h.index() * w..h.index() * w + w];
        let cf: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, r)| r)
            .product();
        for (k, &c) in tree.node(h).children.iter().enumerate() {
            out[k] += cf * values[c.index() * wv + i];
        }
    }
    Ok(out)
}

/// v_i(σ, I) = Σ_{z∈Z_I} u_i(z) π_{-i}(z[I]) π(z[I], z).
pub fn counterfactual_value(
    tree: &GameTree,
    partition: &InfoPartition,
    profile: &Profile,
    infoset: InfosetId,
) -> Result<f64> {
    let per_action = counterfactual_action_values(tree, partition, profile, infoset)?;
    Ok(per_action.iter().zip(profile.get(infoset)).map(|(v, p)| v * p).sum())
}
