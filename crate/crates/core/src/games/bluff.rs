//! One round of Bluff (Liar's Dice).
//!
//! Each player rolls their dice privately, then players alternate bids,
//! player 1 first. A bid `qxf` claims at least `q` dice show face `f`, with
//! the top face wild for every other face. A new bid must raise the quantity,
//! or keep it and raise the face. Calling bluff (`b`) ends the round: the
//! caller wins +1 if the last bid fails and loses otherwise. After the
//! highest bid the opponent can only call, so the call is resolved at once.

use std::fmt;

use super::{BuiltGame, Params};
use crate::game::{InfoPartition, NodeId, Prob, TreeBuilder};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BluffConfig {
    pub dice: [u32; 2],
    pub faces: u32,
    /// Bids remembered by the abstraction; 0 remembers all.
    pub memory: usize,
}

impl Default for BluffConfig {
    fn default() -> Self {
        BluffConfig {
            dice: [1, 1],
            faces: 6,
            memory: 0,
        }
    }
}

impl BluffConfig {
    pub fn apply(&mut self, params: &Params) -> Result<()> {
        for (k, v) in params.iter() {
            match k {
                "d1" => self.dice[0] = Params::parse(k, v)?,
                "d2" => self.dice[1] = Params::parse(k, v)?,
                "faces" => self.faces = Params::parse(k, v)?,
                "r" | "memory" => self.memory = Params::parse(k, v)?,
                _ => return Err(Error::InvalidConfig(format!("unknown bluff parameter `{k}`"))),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dice.contains(&0) {
            return Err(Error::InvalidConfig("each player needs at least one die".into()));
        }
        if self.faces < 2 {
            return Err(Error::InvalidConfig("faces must be at least 2".into()));
        }
        Ok(())
    }

    fn total_dice(&self) -> u32 {
        self.dice[0] + self.dice[1]
    }
}

/// A bid: at least `quantity` dice show `face`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bid {
    pub quantity: u32,
    pub face: u32,
}

impl fmt::Display for Bid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.quantity, self.face)
    }
}

impl Bid {
    /// Bids that may follow `last` (all bids when `None`), in increasing order.
    pub fn successors(last: Option<Bid>, total_dice: u32, faces: u32) -> Vec<Bid> {
        let mut out = Vec::new();
        for quantity in 1..=total_dice {
            for face in 1..=faces {
                let b = Bid { quantity, face };
                if last.is_none_or(|l| b > l) {
                    out.push(b);
                }
            }
        }
        out
    }

    /// Whether the bid holds for the given dice, counting the top face as wild.
    pub fn holds(&self, dice: &[u32], faces: u32) -> bool {
        let count = dice
            .iter()
            .filter(|&&d| d == self.face || (d == faces && self.face != faces))
            .count();
        count as u32 >= self.quantity
    }
}

/// (player, sorted own dice, bids so far).
type Info = (usize, Vec<u32>, Vec<Bid>);

struct Builder<'a> {
    cfg: &'a BluffConfig,
    b: TreeBuilder,
    /// Per decision node.
    info: Vec<Option<Info>>,
    labels: Vec<String>,
}

impl Builder<'_> {
    fn record(&mut self, id: NodeId, info: Option<Info>) {
        if self.info.len() <= id.index() {
            self.info.resize(id.index() + 1, None);
        }
        self.info[id.index()] = info;
    }

    fn roll(&mut self, parent: Option<NodeId>, dice: [Vec<u32>; 2]) {
        let player = if (dice[0].len() as u32) < self.cfg.dice[0] {
            0
        } else {
            1
        };
        let p = Prob::new(1, u64::from(self.cfg.faces));
        let outcomes: Vec<(&str, Prob)> = self.labels.iter().map(|l| (l.as_str(), p)).collect();
        let id = self.b.chance(parent, &outcomes);
        self.record(id, None);
        for face in 1..=self.cfg.faces {
            let mut next = dice.clone();
            next[player].push(face);
            if next[1].len() as u32 == self.cfg.dice[1] {
                self.bid(id, &next, Vec::new());
            } else {
                self.roll(Some(id), next);
            }
        }
    }

    fn bid(&mut self, parent: NodeId, dice: &[Vec<u32>; 2], bids: Vec<Bid>) {
        let actor = bids.len() % 2;
        let last = bids.last().copied();
        let raises = Bid::successors(last, self.cfg.total_dice(), self.cfg.faces);
        if raises.is_empty() {
            // Only the call is left.
            let z = self
                .b
                .terminal(Some(parent), self.resolve(dice, actor, last.expect("max bid")));
            self.record(z, None);
            return;
        }
        let mut labels: Vec<String> = Vec::with_capacity(raises.len() + 1);
        if last.is_some() {
            labels.push("b".into());
        }
        labels.extend(raises.iter().map(|b| b.to_string()));
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let id = self.b.decision(Some(parent), actor, &refs);
        let mut own = dice[actor].clone();
        own.sort_unstable();
        self.record(id, Some((actor, own, bids.clone())));
        if let Some(l) = last {
            let z = self.b.terminal(Some(id), self.resolve(dice, actor, l));
            self.record(z, None);
        }
        for r in raises {
            let mut next = bids.clone();
            next.push(r);
            self.bid(id, dice, next);
        }
    }

    fn resolve(&self, dice: &[Vec<u32>; 2], caller: usize, bid: Bid) -> Vec<f64> {
        let all: Vec<u32> = dice[0].iter().chain(&dice[1]).copied().collect();
        let caller_wins = !bid.holds(&all, self.cfg.faces);
        let mut u = vec![0.0; 2];
        u[caller] = if caller_wins { 1.0 } else { -1.0 };
        u[1 - caller] = -u[caller];
        u
    }
}

fn key(dice: &[u32], bids: &[Bid]) -> String {
    let d: Vec<String> = dice.iter().map(|x| x.to_string()).collect();
    let b: Vec<String> = bids.iter().map(|x| x.to_string()).collect();
    format!("{}|{}", d.join(","), b.join(","))
}

pub fn build_bluff(cfg: &BluffConfig) -> Result<BuiltGame> {
    cfg.validate()?;
    let labels = (1..=cfg.faces).map(|f| f.to_string()).collect();
    let mut bld = Builder {
        cfg,
        b: TreeBuilder::new(2).zero_sum(true),
        info: Vec::new(),
        labels,
    };
    bld.roll(None, [Vec::new(), Vec::new()]);
    let info = bld.info;
    let tree = bld.b.finish();
    tree.ensure_valid()?;
    let get = |n: NodeId| info[n.index()].as_ref().expect("decision info");
    let full = InfoPartition::from_keys(&tree, "full", |n| {
        let (_, dice, bids) = get(n);
        key(dice, bids)
    });
    let r = cfg.memory;
    let name = if r == 0 { "full".to_string() } else { format!("last{r}") };
    let abstraction = InfoPartition::from_keys(&tree, &name, |n| {
        let (_, dice, bids) = get(n);
        let keep = if r == 0 { bids.len() } else { r.min(bids.len()) };
        key(dice, &bids[bids.len() - keep..])
    });
    BuiltGame::new("bluff", tree, full, abstraction)
}
