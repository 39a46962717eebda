//! Phantom tic-tac-toe on a configurable board.
//!
//! Players alternate turns, player 1 first. On a turn a player tries a square
//! they have not tried before. An empty square is claimed and the turn passes;
//! a square the opponent holds is a failure and the same player tries again.
//! A player learns only the outcome of their own attempts. The first line of
//! `win_length` own squares wins (+1/-1); a full board without one is a draw.
//! When a player has a single untried square left the attempt is forced and
//! applied without a decision node.

use std::collections::HashMap;
use std::fmt;

use super::{BuiltGame, Params};
use crate::game::{InfoPartition, NodeId, TreeBuilder};
use crate::{Error, Result};

/// What a player remembers of their own attempts.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MemoryModel {
    /// The full ordered sequence of attempts and outcomes.
    Full,
    /// Turn structure kept; order of failures within a turn forgotten.
    Fosf,
    /// Failures and successes remembered as two separate sequences.
    Foi,
    /// Failures in order, successes as a set.
    Fos,
    /// Failures and successes both as sets.
    Foe,
}

impl MemoryModel {
    pub const ALL: [MemoryModel; 5] = [
        MemoryModel::Full,
        MemoryModel::Fosf,
        MemoryModel::Foi,
        MemoryModel::Fos,
        MemoryModel::Foe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MemoryModel::Full => "full",
            MemoryModel::Fosf => "fosf",
            MemoryModel::Foi => "foi",
            MemoryModel::Fos => "fos",
            MemoryModel::Foe => "foe",
        }
    }
}

impl fmt::Display for MemoryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MemoryModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MemoryModel::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown memory model `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PtttConfig {
    pub width: u32,
    pub height: u32,
    pub win_length: u32,
    pub memory: MemoryModel,
    /// Refuse to build trees with more nodes than this.
    pub node_cap: u128,
}

impl Default for PtttConfig {
    fn default() -> Self {
        PtttConfig {
            width: 3,
            height: 3,
            win_length: 3,
            memory: MemoryModel::Full,
            node_cap: 5_000_000,
        }
    }
}

impl PtttConfig {
    /// 2x3 board, two in a row wins.
    pub fn desk(memory: MemoryModel) -> Self {
        PtttConfig {
            width: 3,
            height: 2,
            win_length: 2,
            memory,
            ..Self::default()
        }
    }

    pub fn apply(&mut self, params: &Params) -> Result<()> {
        for (k, v) in params.iter() {
            match k {
                "width" => self.width = Params::parse(k, v)?,
                "height" => self.height = Params::parse(k, v)?,
                "win" | "win_length" => self.win_length = Params::parse(k, v)?,
                "memory" | "abstraction" => self.memory = v.parse()?,
                "cap" | "node_cap" => self.node_cap = Params::parse(k, v)?,
                _ => return Err(Error::InvalidConfig(format!("unknown pttt parameter `{k}`"))),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let cells = self.width * self.height;
        if self.width == 0 || self.height == 0 || cells < 2 {
            return Err(Error::InvalidConfig("board needs at least two squares".into()));
        }
        if cells > 16 {
            return Err(Error::InvalidConfig("boards above 16 squares are not supported".into()));
        }
        if self.win_length == 0 || self.win_length > self.width.max(self.height) {
            return Err(Error::InvalidConfig(
                "win_length must be between 1 and max(width, height)".into(),
            ));
        }
        Ok(())
    }

    fn cells(&self) -> u32 {
        self.width * self.height
    }

    /// Bitmasks of every winning line.
    fn lines(&self) -> Vec<u16> {
        let (w, h, k) = (self.width as i32, self.height as i32, self.win_length as i32);
        let mut out = Vec::new();
        for (dx, dy) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
            for y in 0..h {
                for x in 0..w {
                    let (ex, ey) = (x + dx * (k - 1), y + dy * (k - 1));
                    if !(0..w).contains(&ex) || !(0..h).contains(&ey) {
                        continue;
                    }
                    let mask = (0..k).fold(0u16, |m, s| m | 1 << ((y + dy * s) * w + x + dx * s));
                    if !out.contains(&mask) {
                        out.push(mask);
                    }
                }
            }
        }
        out
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Hash)]
struct State {
    own: [u16; 2],
    tried: [u16; 2],
    mover: u8,
}

enum Step {
    /// Attempt failed or succeeded without ending the game.
    Continue(State),
    Terminal([f64; 2]),
}

struct Rules {
    full: u16,
    lines: Vec<u16>,
}

impl Rules {
    fn new(cfg: &PtttConfig) -> Self {
        Rules {
            full: ((1u32 << cfg.cells()) - 1) as u16,
            lines: cfg.lines(),
        }
    }

    fn options(&self, s: &State) -> u16 {
        self.full & !s.tried[s.mover as usize]
    }

    /// Returns the step and whether the attempt succeeded.
    fn attempt(&self, s: &State, square: u32) -> (Step, bool) {
        let me = s.mover as usize;
        let bit = 1u16 << square;
        let mut n = *s;
        n.tried[me] |= bit;
        if s.own[1 - me] & bit != 0 {
            return (Step::Continue(n), false);
        }
        n.own[me] |= bit;
        if self.lines.iter().any(|&l| n.own[me] & l == l) {
            let mut u = [-1.0, -1.0];
            u[me] = 1.0;
            return (Step::Terminal(u), true);
        }
        if n.own[0] | n.own[1] == self.full {
            return (Step::Terminal([0.0, 0.0]), true);
        }
        n.mover = 1 - s.mover;
        (Step::Continue(n), true)
    }
}

fn squares(mask: u16) -> impl Iterator<Item = u32> {
    (0..16).filter(move |b| mask & (1 << b) != 0)
}

/// Number of nodes in the materialized tree, counted without building it.
pub fn count_pttt_histories(cfg: &PtttConfig) -> Result<u128> {
    cfg.validate()?;
    let rules = Rules::new(cfg);
    let mut memo = HashMap::new();
    let start = State {
        own: [0, 0],
        tried: [0, 0],
        mover: 0,
    };
    Ok(count(&rules, start, &mut memo))
}

fn count(rules: &Rules, s: State, memo: &mut HashMap<State, u128>) -> u128 {
    if let Some(&c) = memo.get(&s) {
        return c;
    }
    let opts = rules.options(&s);
    let c = if opts.count_ones() == 1 {
        match rules.attempt(&s, opts.trailing_zeros()).0 {
            Step::Continue(n) => count(rules, n, memo),
            Step::Terminal(_) => 1,
        }
    } else {
        1 + squares(opts)
            .map(|sq| match rules.attempt(&s, sq).0 {
                Step::Continue(n) => count(rules, n, memo),
                Step::Terminal(_) => 1,
            })
            .sum::<u128>()
    };
    memo.insert(s, c);
    c
}

type Obs = Vec<(u32, bool)>;

struct Builder<'a> {
    rules: &'a Rules,
    b: TreeBuilder,
    labels: Vec<String>,
    info: Vec<Option<(usize, Obs)>>,
}

impl Builder<'_> {
    fn node(&mut self, parent: Option<NodeId>, s: State, mut obs: [Obs; 2]) {
        let me = s.mover as usize;
        let opts = self.rules.options(&s);
        if opts.count_ones() == 1 {
            let sq = opts.trailing_zeros();
            let (step, ok) = self.rules.attempt(&s, sq);
            obs[me].push((sq, ok));
            match step {
                Step::Continue(n) => self.node(parent, n, obs),
                Step::Terminal(u) => {
                    self.b.terminal(parent, u.to_vec());
                }
            }
            return;
        }
        let sqs: Vec<u32> = squares(opts).collect();
        let labels: Vec<&str> = sqs.iter().map(|&q| self.labels[q as usize].as_str()).collect();
        let id = self.b.decision(parent, me, &labels);
        if self.info.len() <= id.index() {
            self.info.resize(id.index() + 1, None);
        }
        self.info[id.index()] = Some((me, obs[me].clone()));
        for sq in sqs {
            let (step, ok) = self.rules.attempt(&s, sq);
            match step {
                Step::Continue(n) => {
                    let mut o = obs.clone();
                    o[me].push((sq, ok));
                    self.node(Some(id), n, o);
                }
                Step::Terminal(u) => {
                    self.b.terminal(Some(id), u.to_vec());
                }
            }
        }
    }
}

fn fmt_attempts(items: &[u32]) -> String {
    items.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",")
}

/// Infoset key of an observation history under a memory model.
fn memory_key(model: MemoryModel, obs: &[(u32, bool)]) -> String {
    let fails: Vec<u32> = obs.iter().filter(|o| !o.1).map(|o| o.0).collect();
    let wins: Vec<u32> = obs.iter().filter(|o| o.1).map(|o| o.0).collect();
    let sorted = |v: &[u32]| {
        let mut v = v.to_vec();
        v.sort_unstable();
        v
    };
    match model {
        MemoryModel::Full => obs
            .iter()
            .map(|&(q, ok)| format!("{q}{}", if ok { '+' } else { '-' }))
            .collect::<Vec<_>>()
            .join(","),
        MemoryModel::Fosf => {
            let mut turns = Vec::new();
            let mut pending = Vec::new();
            for &(q, ok) in obs {
                if ok {
                    turns.push(format!("{{{}}}{q}", fmt_attempts(&sorted(&pending))));
                    pending.clear();
                } else {
                    pending.push(q);
                }
            }
            format!("{};{{{}}}", turns.join(","), fmt_attempts(&sorted(&pending)))
        }
        MemoryModel::Foi => format!("F{}|S{}", fmt_attempts(&fails), fmt_attempts(&wins)),
        MemoryModel::Fos => format!("F{}|S{}", fmt_attempts(&fails), fmt_attempts(&sorted(&wins))),
        MemoryModel::Foe => format!("F{}|S{}", fmt_attempts(&sorted(&fails)), fmt_attempts(&sorted(&wins))),
    }
}

/// Build PTTT with the full-memory partition and the configured memory model.
/// Refuses boards whose tree exceeds `node_cap`, reporting the exact size.
pub fn build_pttt(cfg: &PtttConfig) -> Result<BuiltGame> {
    let size = count_pttt_histories(cfg)?;
    if size > cfg.node_cap {
        return Err(Error::BuildRefused {
            estimate: size,
            cap: cfg.node_cap,
        });
    }
    let rules = Rules::new(cfg);
    let mut bld = Builder {
        rules: &rules,
        b: TreeBuilder::new(2).zero_sum(true),
        labels: (0..cfg.cells()).map(|q| format!("s{q}")).collect(),
        info: Vec::new(),
    };
    let start = State {
        own: [0, 0],
        tried: [0, 0],
        mover: 0,
    };
    bld.node(None, start, [Vec::new(), Vec::new()]);
    let info = bld.info;
    let tree = bld.b.finish();
    debug_assert_eq!(tree.len() as u128, size);
    tree.ensure_valid()?;
    let obs = |n: NodeId| &info[n.index()].as_ref().expect("decision info").1;
    let full = InfoPartition::from_keys(&tree, "full", |n| memory_key(MemoryModel::Full, obs(n)));
    let abstraction = InfoPartition::from_keys(&tree, cfg.memory.name(), |n| memory_key(cfg.memory, obs(n)));
    BuiltGame::new("pttt", tree, full, abstraction)
}
