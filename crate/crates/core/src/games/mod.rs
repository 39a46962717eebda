//! Builders for the game families: die-roll poker (with skew and three-round
//! variants), Bluff, phantom tic-tac-toe and the CFR counterexample.
//!
//! Every builder returns a [`BuiltGame`]: the tree, a perfect-recall
//! partition and an abstract partition that coarsens it.

mod bluff;
mod counterexample;
mod drp;
mod pttt;

use std::str::FromStr;

pub use bluff::{build_bluff, Bid, BluffConfig};
pub use counterexample::{build_counterexample, CounterexampleConfig};
pub use drp::{build_drp, build_drp3, max_pot, DrpConfig};
pub use pttt::{build_pttt, count_pttt_histories, MemoryModel, PtttConfig};

use crate::game::{is_perfect_recall, GameTree, InfoPartition};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct BuiltGame {
    pub name: String,
    pub tree: GameTree,
    /// Perfect-recall partition.
    pub refinement: InfoPartition,
    /// Abstract partition; equal to `refinement` for unabstracted games.
    pub abstraction: InfoPartition,
}

impl BuiltGame {
    pub(crate) fn new(
        name: &str,
        tree: GameTree,
        refinement: InfoPartition,
        abstraction: InfoPartition,
    ) -> Result<Self> {
        refinement.ensure_valid(&tree)?;
        abstraction.ensure_valid(&tree)?;
        if let Some((a, b)) = is_perfect_recall(&tree, &refinement).counterexample {
            return Err(Error::InvalidPartition(format!(
                "refinement `{}` lacks perfect recall at nodes {a} and {b}",
                refinement.name()
            )));
        }
        Ok(BuiltGame {
            name: name.to_string(),
            tree,
            refinement,
            abstraction,
        })
    }

    /// Partition by name: `full`/`none` for the refinement, anything else
    /// matching the abstraction's name (or `abstract`).
    pub fn partition(&self, which: &str) -> Result<&InfoPartition> {
        match which {
            "full" | "none" | "refinement" => Ok(&self.refinement),
            w if w == "abstract" || w == self.abstraction.name() => Ok(&self.abstraction),
            w => Err(Error::InvalidConfig(format!(
                "game `{}` has no partition `{w}` (try `full` or `{}`)",
                self.name,
                self.abstraction.name()
            ))),
        }
    }
}

/// Ordered `key=value` parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(Vec<(String, String)>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse `key=value` tokens.
    pub fn from_pairs<'a, I: IntoIterator<Item = &'a str>>(items: I) -> Result<Self> {
        let mut p = Params::new();
        for item in items {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, found `{item}`")))?;
            p.set(k.trim(), v.trim());
        }
        Ok(p)
    }

    /// Parse a config file body: one `key=value` per line, `#` comments.
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_pairs(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty()),
        )
    }

    /// Later values replace earlier ones for the same key.
    pub fn set(&mut self, key: &str, value: &str) {
        match self.0.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value.to_string(),
            None => self.0.push((key.to_string(), value.to_string())),
        }
    }

    pub fn merge(&mut self, other: &Params) {
        for (k, v) in other.iter() {
            self.set(k, v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        let i = self.0.iter().position(|(k, _)| k == key)?;
        Some(self.0.remove(i).1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad value `{value}` for `{key}`")))
    }
}

/// Game families known to [`build_game`].
pub const FAMILIES: &[&str] = &["drp", "drp3", "skew-drp", "bluff", "pttt", "counterexample"];

/// Build a game family by name with `key=value` overrides.
pub fn build_game(family: &str, params: &Params) -> Result<BuiltGame> {
    match family {
        "drp" | "skew-drp" | "drp3" => {
            let mut cfg = if family == "drp3" {
                DrpConfig::three_round()
            } else {
                DrpConfig::default()
            };
            cfg.apply(params)?;
            if family == "skew-drp" && params.get("delta").or(params.get("skew")).is_none() {
                return Err(Error::InvalidConfig("skew-drp needs delta=".into()));
            }
            build_drp(&cfg)
        }
        "bluff" => {
            let mut cfg = BluffConfig::default();
            cfg.apply(params)?;
            build_bluff(&cfg)
        }
        "pttt" => {
            let mut cfg = PtttConfig::default();
            cfg.apply(params)?;
            build_pttt(&cfg)
        }
        "counterexample" => {
            let mut cfg = CounterexampleConfig::default();
            cfg.apply(params)?;
            build_counterexample(&cfg)
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown game `{other}`; known: {}",
            FAMILIES.join(", ")
        ))),
    }
}
