//! Small hand-built games shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use irrecall::game::{GameTree, InfoPartition, NodeId, Prob, TreeBuilder};

pub struct Hand {
    pub name: &'static str,
    pub tree: GameTree,
    pub partition: InfoPartition,
    keys: Keys,
}

impl Hand {
    /// A partition whose keys are `f` of the full partition's keys.
    pub fn coarsen(&self, name: &str, f: impl Fn(&str) -> String) -> InfoPartition {
        InfoPartition::from_keys(&self.tree, name, |n| f(&self.keys.0[&n]))
    }
}

struct Keys(HashMap<NodeId, String>);

impl Keys {
    fn partition(&self, tree: &GameTree, name: &str) -> InfoPartition {
        InfoPartition::from_keys(tree, name, |n| self.0[&n].clone())
    }
}

/// Three-card Kuhn poker, ante 1, bet 1.
pub fn kuhn() -> Hand {
    let mut b = TreeBuilder::new(2).zero_sum(true);
    let mut keys = Keys(HashMap::new());
    let cards = ["J", "Q", "K"];
    let deals: Vec<(usize, usize)> = (0..3)
        .flat_map(|a| (0..3).filter(move |&c| c != a).map(move |c| (a, c)))
        .collect();
    let labels: Vec<String> = deals
        .iter()
        .map(|&(a, c)| format!("{}{}", cards[a], cards[c]))
        .collect();
    let outcomes: Vec<(&str, Prob)> = labels.iter().map(|l| (l.as_str(), Prob::new(1, 6))).collect();
    let root = b.chance(None, &outcomes);
    for &(c1, c2) in &deals {
        let win = if c1 > c2 { 1.0 } else { -1.0 };
        let k1 = |h: &str| format!("{}{h}", cards[c1]);
        let k2 = |h: &str| format!("{}{h}", cards[c2]);
        let n = b.decision(Some(root), 0, &["check", "bet"]);
        keys.0.insert(n, k1(""));
        // check
        let m = b.decision(Some(n), 1, &["check", "bet"]);
        keys.0.insert(m, k2("c"));
        b.terminal(Some(m), vec![win, -win]);
        let o = b.decision(Some(m), 0, &["fold", "call"]);
        keys.0.insert(o, k1("cb"));
        b.terminal(Some(o), vec![-1.0, 1.0]);
        b.terminal(Some(o), vec![2.0 * win, -2.0 * win]);
        // bet
        let m = b.decision(Some(n), 1, &["fold", "call"]);
        keys.0.insert(m, k2("b"));
        b.terminal(Some(m), vec![1.0, -1.0]);
        b.terminal(Some(m), vec![2.0 * win, -2.0 * win]);
    }
    let tree = b.finish();
    let partition = keys.partition(&tree, "full");
    Hand {
        name: "kuhn",
        tree,
        partition,
        keys,
    }
}

/// A biased coin seen by player 1 only, then simultaneous-looking matching
/// pennies.
pub fn coin_pennies() -> Hand {
    let mut b = TreeBuilder::new(2).zero_sum(true);
    let mut keys = Keys(HashMap::new());
    let root = b.chance(None, &[("heavy", Prob::new(1, 3)), ("light", Prob::new(2, 3))]);
    for (coin, scale) in [("heavy", 3.0), ("light", 1.0)] {
        let n = b.decision(Some(root), 0, &["H", "T"]);
        keys.0.insert(n, coin.to_string());
        for a in ["H", "T"] {
            let m = b.decision(Some(n), 1, &["H", "T"]);
            keys.0.insert(m, "guess".to_string());
            for g in ["H", "T"] {
                let u = if a == g { -scale } else { scale * 0.5 };
                b.terminal(Some(m), vec![u, -u]);
            }
        }
    }
    let tree = b.finish();
    let partition = keys.partition(&tree, "full");
    Hand {
        name: "coin-pennies",
        tree,
        partition,
        keys,
    }
}

/// Player 1 picks a, b or c; player 2 only tells a from {b, c}; player 1
/// then picks u or v knowing everything.
pub fn three_way() -> Hand {
    let mut b = TreeBuilder::new(2).zero_sum(true);
    let mut keys = Keys(HashMap::new());
    let root = b.decision(None, 0, &["a", "b", "c"]);
    keys.0.insert(root, "root".into());
    let table = [
        [[2.0, -1.0], [0.5, 0.0]],
        [[-2.0, 3.0], [1.0, -0.5]],
        [[0.0, 1.5], [-1.0, 2.5]],
    ];
    for (i, first) in ["a", "b", "c"].into_iter().enumerate() {
        let m = b.decision(Some(root), 1, &["x", "y"]);
        keys.0
            .insert(m, if first == "a" { "sawA".into() } else { "sawBC".into() });
        for (j, second) in ["x", "y"].into_iter().enumerate() {
            let o = b.decision(Some(m), 0, &["u", "v"]);
            keys.0.insert(o, format!("{first}{second}"));
            for u in table[i][j] {
                b.terminal(Some(o), vec![u, -u]);
            }
        }
    }
    let tree = b.finish();
    let partition = keys.partition(&tree, "full");
    Hand {
        name: "three-way",
        tree,
        partition,
        keys,
    }
}

pub fn hand_built() -> Vec<Hand> {
    vec![kuhn(), coin_pennies(), three_way()]
}
