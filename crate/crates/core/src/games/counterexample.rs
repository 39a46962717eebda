//! Zero-sum imperfect-recall game on which CFR's average regret stays constant.
//!
//! Chance picks a, b, d or e uniformly. Player 1 chooses p (payoff 0) or c at
//! I_1 = {a, b} or I_2 = {d, e}. Player 2 sees everything and picks p or c at
//! ac, bc, dc, ec. After c, player 1 picks l or r at I_3, which merges all four
//! histories. Utilities for player 1:
//!
//! ```text
//!        P2 p    l    r
//!   a     -ξ    -1   +1
//!   b     +ξ    +1   -1
//!   d     +ξ    -1   +1
//!   e     -ξ    +1   -1
//! ```
//!
//! The perfect-recall refinement splits I_3 into {acc, bcc} and {dcc, ecc}.

use super::{BuiltGame, Params};
use crate::game::{InfoPartition, Prob, TreeBuilder};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleConfig {
    pub xi: f64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig { xi: 0.5 }
    }
}

impl CounterexampleConfig {
    pub fn apply(&mut self, params: &Params) -> Result<()> {
        for (k, v) in params.iter() {
            match k {
                "xi" => self.xi = Params::parse(k, v)?,
                _ => return Err(Error::InvalidConfig(format!("unknown counterexample parameter `{k}`"))),
            }
        }
        Ok(())
    }
}

const OUTCOMES: [(&str, f64, f64); 4] = [
    // (chance label, sign of P2-pass utility, sign of l utility)
    ("a", -1.0, -1.0),
    ("b", 1.0, 1.0),
    ("d", 1.0, -1.0),
    ("e", -1.0, 1.0),
];

pub fn build_counterexample(cfg: &CounterexampleConfig) -> Result<BuiltGame> {
    let xi = cfg.xi;
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::InvalidConfig(format!("xi must lie in (0,1), got {xi}")));
    }
    let mut b = TreeBuilder::new(2).zero_sum(true);
    let quarter = Prob::new(1, 4);
    let root = b.chance(None, &OUTCOMES.map(|(l, _, _)| (l, quarter)));
    let mut abs_key: Vec<Option<String>> = Vec::new();
    let mut fine_key = Vec::new();
    let mut push = |id: crate::game::NodeId, abs: Option<String>, fine: Option<String>| {
        let i = id.index();
        if abs_key.len() <= i {
            abs_key.resize(i + 1, None);
            fine_key.resize(i + 1, None);
        }
        abs_key[i] = abs;
        fine_key[i] = fine;
    };
    for (label, pass_sign, l_sign) in OUTCOMES {
        let first = if matches!(label, "a" | "b") { "I1" } else { "I2" };
        let i3_fine = if matches!(label, "a" | "b") { "I3/ab" } else { "I3/de" };
        let n1 = b.decision(Some(root), 0, &["p", "c"]);
        push(n1, Some(first.into()), Some(first.into()));
        b.terminal(Some(n1), vec![0.0, 0.0]);
        let n2 = b.decision(Some(n1), 1, &["p", "c"]);
        let h2 = format!("{label}c");
        push(n2, Some(h2.clone()), Some(h2));
        b.terminal(Some(n2), vec![pass_sign * xi, -pass_sign * xi]);
        let n3 = b.decision(Some(n2), 0, &["l", "r"]);
        push(n3, Some("I3".into()), Some(i3_fine.into()));
        b.terminal(Some(n3), vec![l_sign, -l_sign]);
        b.terminal(Some(n3), vec![-l_sign, l_sign]);
    }
    let tree = b.finish();
    tree.ensure_valid()?;
    let key = |keys: &[Option<String>], n: crate::game::NodeId| keys[n.index()].clone().expect("decision key");
    let abstraction = InfoPartition::from_keys(&tree, "abstract", |n| key(&abs_key, n));
    let refinement = InfoPartition::from_keys(&tree, "refined", |n| key(&fine_key, n));
    BuiltGame::new("counterexample", tree, refinement, abstraction)
}
