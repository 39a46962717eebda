//! Line-oriented tree text format.
//!
//! ```text
//! game players=2 zero_sum=true
//! 0 chance - - outcomes=h@1/2,t@1/2
//! 1 decision 0 h player=0 actions=l,r
//! 2 terminal 1 l utility=1,-1
//! ```
//!
//! Nodes appear in pre-order. Exact probabilities are written as `p/q`,
//! others as decimals. Floats use the shortest round-trip representation.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::tree::{GameTree, NodeId, NodeKind, Prob, TreeBuilder};
use crate::{Error, Result};

pub fn write_tree(tree: &GameTree) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "game players={} zero_sum={}",
        tree.num_players(),
        tree.is_zero_sum()
    );
    for (id, node) in tree.nodes() {
        let parent = node.parent.map_or("-".to_string(), |p| p.to_string());
        let action = node.incoming.map_or("-", |l| tree.label(l));
        let labels = |ls: &[super::tree::Label]| ls.iter().map(|&l| tree.label(l)).collect::<Vec<_>>().join(",");
        let (kind, payload) = match &node.kind {
            NodeKind::Decision { player, actions } => {
                ("decision", format!("player={player} actions={}", labels(actions)))
            }
            NodeKind::Chance { actions, probs, exact } => {
                let items: Vec<String> = actions
                    .iter()
                    .enumerate()
                    .map(|(k, &l)| match exact {
                        Some(e) => format!("{}@{}/{}", tree.label(l), e[k].numer(), e[k].denom()),
                        None => format!("{}@{}", tree.label(l), probs[k]),
                    })
                    .collect();
                ("chance", format!("outcomes={}", items.join(",")))
            }
            NodeKind::Terminal { utility } => {
                let u: Vec<String> = utility.iter().map(|x| x.to_string()).collect();
                ("terminal", format!("utility={}", u.join(",")))
            }
        };
        let _ = writeln!(out, "{id} {kind} {parent} {action} {payload}");
    }
    out
}

/// SHA-256 of the text form, hex encoded.
pub fn content_hash(tree: &GameTree) -> String {
    let digest = Sha256::digest(write_tree(tree).as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn parse_tree(text: &str) -> Result<GameTree> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    let mut players = None;
    let mut zero_sum = false;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("game") {
        return Err(perr(hline, "header must start with `game`".into()));
    }
    for kv in parts {
        match kv.split_once('=') {
            Some(("players", v)) => players = Some(v.parse::<usize>().map_err(|e| perr(hline, e.to_string()))?),
            Some(("zero_sum", v)) => zero_sum = v.parse::<bool>().map_err(|e| perr(hline, e.to_string()))?,
            _ => return Err(perr(hline, format!("unknown header field `{kv}`"))),
        }
    }
    let players = players.ok_or_else(|| perr(hline, "header lacks players=".into()))?;
    let mut b = TreeBuilder::new(players).zero_sum(zero_sum);

    for (line, text) in lines {
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() < 5 {
            return Err(perr(line, "expected `id kind parent action payload`".into()));
        }
        let id: usize = fields[0].parse().map_err(|_| perr(line, "bad node id".into()))?;
        if id != b.len() {
            return Err(perr(line, format!("expected node id {}, found {id}", b.len())));
        }
        let parent = match fields[2] {
            "-" => None,
            p => {
                let p: usize = p.parse().map_err(|_| perr(line, "bad parent id".into()))?;
                if p >= id {
                    return Err(perr(line, "parent must precede child".into()));
                }
                Some(NodeId::new(p))
            }
        };
        if parent.is_none() != (id == 0) {
            return Err(perr(line, "only node 0 is the root".into()));
        }
        let payload: Vec<(&str, &str)> = fields[4..]
            .iter()
            .map(|kv| {
                kv.split_once('=')
                    .ok_or_else(|| perr(line, format!("bad field `{kv}`")))
            })
            .collect::<Result<_>>()?;
        let field = |name: &str| {
            payload
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| perr(line, format!("missing `{name}=`")))
        };
        let kind = match fields[1] {
            "decision" => {
                let player = field("player")?.parse().map_err(|_| perr(line, "bad player".into()))?;
                let actions = field("actions")?.split(',').map(|a| b.label(a)).collect();
                NodeKind::Decision { player, actions }
            }
            "chance" => {
                let mut actions = Vec::new();
                let mut probs = Vec::new();
                let mut exact = Vec::new();
                let mut all_exact = true;
                for item in field("outcomes")?.split(',') {
                    let (label, p) = item
                        .split_once('@')
                        .ok_or_else(|| perr(line, format!("bad outcome `{item}`")))?;
                    actions.push(b.label(label));
                    match p.split_once('/') {
                        Some((n, d)) => {
                            let n: u64 = n.parse().map_err(|_| perr(line, "bad numerator".into()))?;
                            let d: u64 = d.parse().map_err(|_| perr(line, "bad denominator".into()))?;
                            if d == 0 {
                                return Err(perr(line, "zero denominator".into()));
                            }
                            let r = Prob::new(n, d);
                            probs.push(n as f64 / d as f64);
                            exact.push(r);
                        }
                        None => {
                            all_exact = false;
                            probs.push(p.parse().map_err(|_| perr(line, "bad probability".into()))?);
                        }
                    }
                }
                NodeKind::Chance {
                    actions,
                    probs,
                    exact: all_exact.then_some(exact),
                }
            }
            "terminal" => {
                let utility = field("utility")?
                    .split(',')
                    .map(|u| u.parse::<f64>().map_err(|_| perr(line, format!("bad utility `{u}`"))))
                    .collect::<Result<_>>()?;
                NodeKind::Terminal { utility }
            }
            other => return Err(perr(line, format!("unknown node kind `{other}`"))),
        };
        if let Some(p) = parent {
            let parent_actions = match b.node_kind(p) {
                NodeKind::Terminal { .. } => return Err(perr(line, "parent is a terminal".into())),
                NodeKind::Decision { actions, .. } | NodeKind::Chance { actions, .. } => actions.clone(),
            };
            let k = b.child_count(p);
            let label = b.label(fields[3]);
            if parent_actions.get(k) != Some(&label) {
                return Err(perr(
                    line,
                    format!("action `{}` out of order under node {p}", fields[3]),
                ));
            }
        }
        b.add(parent, kind);
    }
    if b.is_empty() {
        return Err(perr(hline, "no nodes".into()));
    }
    Ok(b.finish())
}
