//! Die-roll poker.
//!
//! Each round opens with a private die roll for player 1 and then player 2,
//! followed by betting where player 1 acts first. Betting per round:
//!
//! ```text
//! ""    P1  c r        (f c r at the very first decision when opening_fold)
//! "c"   P2  c r
//! "r"   P2  f c r
//! "cr"  P1  f c r
//! "rr"  P1  f c
//! "crr" P2  f c
//! ```
//!
//! `cc` and any call of a raise close the round. With six-sided dice and two
//! rounds this gives 2610 infoset-actions in the full game and 860 when
//! players only remember their dice sum from round 2 on.

use super::{BuiltGame, Params};
use crate::game::{GameTree, InfoPartition, NodeId, Prob, TreeBuilder};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DrpConfig {
    pub die_sides: u32,
    pub rounds: u32,
    /// Raise size for each round, in chips.
    pub raise_sizes: Vec<f64>,
    pub raises_per_round: u32,
    pub ante: f64,
    /// Showdown bonus to player 1, as a fraction of the pot, when player 1's
    /// second roll is even.
    pub skew: f64,
    /// Allow player 1 to fold at the game's first decision.
    pub opening_fold: bool,
}

impl Default for DrpConfig {
    fn default() -> Self {
        DrpConfig {
            die_sides: 6,
            rounds: 2,
            raise_sizes: vec![2.0, 4.0],
            raises_per_round: 2,
            ante: 1.0,
            skew: 0.0,
            opening_fold: true,
        }
    }
}

impl DrpConfig {
    /// Three-round variant with a round-3 raise of 8 chips.
    pub fn three_round() -> Self {
        DrpConfig {
            rounds: 3,
            raise_sizes: vec![2.0, 4.0, 8.0],
            ..Self::default()
        }
    }

    pub fn with_sides(mut self, sides: u32) -> Self {
        self.die_sides = sides;
        self
    }

    pub fn with_skew(mut self, skew: f64) -> Self {
        self.skew = skew;
        self
    }

    /// Apply `key=value` overrides. Keys: `sides`, `rounds`, `raises`
    /// (comma list), `cap`, `ante`, `delta`, `opening_fold`.
    pub fn apply(&mut self, params: &Params) -> Result<()> {
        for (k, v) in params.iter() {
            match k {
                "sides" | "die_sides" => self.die_sides = Params::parse(k, v)?,
                "rounds" => {
                    self.rounds = Params::parse(k, v)?;
                    if self.rounds == 3 && self.raise_sizes.len() == 2 {
                        self.raise_sizes.push(8.0);
                    }
                }
                "raises" | "raise_sizes" => {
                    self.raise_sizes = v.split(',').map(|x| Params::parse(k, x)).collect::<Result<_>>()?
                }
                "cap" | "raises_per_round" => self.raises_per_round = Params::parse(k, v)?,
                "ante" => self.ante = Params::parse(k, v)?,
                "delta" | "skew" => self.skew = Params::parse(k, v)?,
                "opening_fold" => self.opening_fold = Params::parse(k, v)?,
                _ => return Err(Error::InvalidConfig(format!("unknown drp parameter `{k}`"))),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.die_sides < 2 {
            return bad("die_sides must be at least 2");
        }
        if !(2..=3).contains(&self.rounds) {
            return bad("rounds must be 2 or 3");
        }
        if self.raise_sizes.len() != self.rounds as usize {
            return bad("need one raise size per round");
        }
        if self.raise_sizes.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return bad("raise sizes must be positive");
        }
        if !(self.ante >= 0.0 && self.ante.is_finite()) {
            return bad("ante must be nonnegative");
        }
        if !(self.skew >= 0.0 && self.skew.is_finite()) {
            return bad("skew must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Info {
    player: usize,
    round: usize,
    rolls: Vec<u32>,
    bets: String,
}

struct Builder<'a> {
    cfg: &'a DrpConfig,
    b: TreeBuilder,
    info: Vec<Option<Info>>,
    labels: Vec<String>,
}

#[derive(Clone)]
struct State {
    rolls: [Vec<u32>; 2],
    contrib: [f64; 2],
    round: usize,
    /// Betting of completed rounds joined by '/', then the current round.
    bets: String,
    round_bets: String,
    raises: u32,
}

impl Builder<'_> {
    fn record(&mut self, id: NodeId, info: Option<Info>) {
        if self.info.len() <= id.index() {
            self.info.resize(id.index() + 1, None);
        }
        self.info[id.index()] = info;
    }

    fn roll(&mut self, parent: Option<NodeId>, s: State, player: usize) {
        let p = Prob::new(1, u64::from(self.cfg.die_sides));
        let outcomes: Vec<(&str, Prob)> = self.labels.iter().map(|l| (l.as_str(), p)).collect();
        let id = self.b.chance(parent, &outcomes);
        self.record(id, None);
        for face in 1..=self.cfg.die_sides {
            let mut next = s.clone();
            next.rolls[player].push(face);
            if player == 0 {
                self.roll(Some(id), next, 1);
            } else {
                self.bet(id, next);
            }
        }
    }

    fn bet(&mut self, parent: NodeId, s: State) {
        let actor = s.round_bets.len() % 2;
        let facing = s.contrib[1 - actor] > s.contrib[actor];
        let opening = self.cfg.opening_fold && s.round == 0 && s.round_bets.is_empty();
        let mut actions = Vec::with_capacity(3);
        if facing || opening {
            actions.push("f");
        }
        actions.push("c");
        if s.raises < self.cfg.raises_per_round {
            actions.push("r");
        }
        let id = self.b.decision(Some(parent), actor, &actions);
        self.record(
            id,
            Some(Info {
                player: actor,
                round: s.round,
                rolls: s.rolls[actor].clone(),
                bets: format!("{}{}", s.bets, s.round_bets),
            }),
        );
        for a in actions {
            let mut n = s.clone();
            n.round_bets.push_str(a);
            match a {
                "f" => {
                    let lost = s.contrib[actor];
                    let mut u = vec![lost, lost];
                    u[actor] = -lost;
                    let z = self.b.terminal(Some(id), u);
                    self.record(z, None);
                }
                "c" if facing || !s.round_bets.is_empty() => {
                    n.contrib[actor] = n.contrib[1 - actor];
                    self.end_round(id, n);
                }
                "c" => self.bet(id, n),
                _ => {
                    n.contrib[actor] = n.contrib[1 - actor] + self.cfg.raise_sizes[s.round];
                    n.raises += 1;
                    self.bet(id, n);
                }
            }
        }
    }

    fn end_round(&mut self, parent: NodeId, mut s: State) {
        if s.round + 1 < self.cfg.rounds as usize {
            s.bets.push_str(&s.round_bets);
            s.bets.push('/');
            s.round_bets.clear();
            s.round += 1;
            s.raises = 0;
            self.roll(Some(parent), s, 0);
            return;
        }
        let z = self.b.terminal(Some(parent), showdown(self.cfg, &s.rolls, s.contrib));
        self.record(z, None);
    }
}

/// Showdown utilities given both players' rolls and equal contributions.
fn showdown(cfg: &DrpConfig, rolls: &[Vec<u32>; 2], contrib: [f64; 2]) -> Vec<f64> {
    let s1: u32 = rolls[0].iter().sum();
    let s2: u32 = rolls[1].iter().sum();
    let mut u1 = match s1.cmp(&s2) {
        std::cmp::Ordering::Greater => contrib[1],
        std::cmp::Ordering::Less => -contrib[0],
        std::cmp::Ordering::Equal => 0.0,
    };
    if cfg.skew > 0.0 && rolls[0].get(1).is_some_and(|r| r % 2 == 0) {
        u1 += cfg.skew * (contrib[0] + contrib[1]);
    }
    vec![u1, -u1]
}

/// Build DRP with its full partition and the sum-abstraction.
///
/// For two rounds the abstraction remembers only the dice sum from round 2 on.
/// For three rounds it remembers the sum during round 2 and individual rolls
/// again in round 3.
pub fn build_drp(cfg: &DrpConfig) -> Result<BuiltGame> {
    cfg.validate()?;
    let labels = (1..=cfg.die_sides).map(|f| f.to_string()).collect();
    let mut bld = Builder {
        cfg,
        b: TreeBuilder::new(2).zero_sum(true),
        info: Vec::new(),
        labels,
    };
    let start = State {
        rolls: [Vec::new(), Vec::new()],
        contrib: [cfg.ante, cfg.ante],
        round: 0,
        bets: String::new(),
        round_bets: String::new(),
        raises: 0,
    };
    bld.roll(None, start, 0);
    let info = bld.info;
    let tree: GameTree = bld.b.finish();
    tree.ensure_valid()?;

    let info_of = |n: NodeId| info[n.index()].as_ref().expect("decision without info");
    let full = InfoPartition::from_keys(&tree, "full", |n| {
        let i = info_of(n);
        format!("{}|{}", join(&i.rolls), i.bets)
    });
    let three = cfg.rounds == 3;
    let abs_name = if three { "ir3" } else { "ir" };
    let abstraction = InfoPartition::from_keys(&tree, abs_name, |n| {
        let i = info_of(n);
        if i.round == 0 || (three && i.round == 2) {
            format!("{}|{}", join(&i.rolls), i.bets)
        } else {
            format!("s{}|{}", i.rolls.iter().sum::<u32>(), i.bets)
        }
    });
    debug_assert!(info.iter().flatten().all(|i| i.player < 2));
    let name = match (three, cfg.skew > 0.0) {
        (false, false) => "drp",
        (false, true) => "skew-drp",
        (true, false) => "drp3",
        (true, true) => "skew-drp3",
    };
    BuiltGame::new(name, tree, full, abstraction)
}

/// Three-round DRP with the re-remembering abstraction.
pub fn build_drp3(cfg: &DrpConfig) -> Result<BuiltGame> {
    if cfg.rounds != 3 {
        return Err(Error::InvalidConfig("drp3 needs rounds = 3".into()));
    }
    build_drp(cfg)
}

fn join(rolls: &[u32]) -> String {
    rolls.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
}

/// Upper bound on the skew utility gap between merged infosets: δ times the
/// largest pot reachable from any node.
pub fn max_pot(cfg: &DrpConfig) -> f64 {
    let per_round: f64 = cfg
        .raise_sizes
        .iter()
        .map(|r| r * f64::from(cfg.raises_per_round))
        .sum();
    2.0 * (cfg.ante + per_round)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::is_perfect_recall;

    #[test]
    fn reference_sizes() {
        let g = build_drp(&DrpConfig::default()).unwrap();
        assert_eq!(g.refinement.count_infoset_actions(), 2610);
        assert_eq!(g.abstraction.count_infoset_actions(), 860);
        assert!(is_perfect_recall(&g.tree, &g.refinement).holds);
        assert!(!is_perfect_recall(&g.tree, &g.abstraction).holds);
        assert_eq!(g.tree.utility_range(0), 26.0);
    }

    #[test]
    fn no_opening_fold_counts() {
        let cfg = DrpConfig {
            opening_fold: false,
            ..DrpConfig::default()
        };
        let g = build_drp(&cfg).unwrap();
        assert_eq!(g.refinement.count_infoset_actions(), 6 * 14 + 5 * 36 * 14);
    }

    #[test]
    fn two_sided_first_round() {
        let g = build_drp(&DrpConfig::default().with_sides(2)).unwrap();
        let t = &g.tree;
        let root = t.node(t.root());
        assert!(root.is_chance());
        let outcomes: usize = root.children.iter().map(|&c| t.node(c).children.len()).sum();
        assert_eq!(outcomes, 4);
        // per roll pair: 15 round-1 actions; 5 continuations x 4 roll pairs x 14
        let per_player_view = 2 * 15 + 5 * 4 * 14;
        assert_eq!(g.refinement.count_infoset_actions(), per_player_view);
    }

    #[test]
    fn skew_zero_matches_plain() {
        let a = build_drp(&DrpConfig::default().with_sides(3)).unwrap();
        let b = build_drp(&DrpConfig::default().with_sides(3).with_skew(0.0)).unwrap();
        for (z, w) in a.tree.terminals().zip(b.tree.terminals()) {
            assert_eq!(a.tree.node(z).utility(), b.tree.node(w).utility());
        }
    }

    #[test]
    fn skew_bonus_depends_on_second_roll() {
        let cfg = DrpConfig::default().with_skew(0.5);
        let even = showdown(&cfg, &[vec![1, 2], vec![1, 2]], [3.0, 3.0]);
        let odd = showdown(&cfg, &[vec![2, 1], vec![1, 2]], [3.0, 3.0]);
        assert_eq!(even, vec![3.0, -3.0]);
        assert_eq!(odd, vec![0.0, 0.0]);
        let win = showdown(&cfg, &[vec![6, 6], vec![1, 1]], [5.0, 5.0]);
        assert_eq!(win, vec![10.0, -10.0]);
    }

    #[test]
    fn config_errors() {
        assert!(build_drp(&DrpConfig::default().with_sides(1)).is_err());
        let c = DrpConfig {
            raise_sizes: vec![2.0, 0.0],
            ..Default::default()
        };
        assert!(build_drp(&c).is_err());
        assert!(build_drp3(&DrpConfig::default()).is_err());
    }

    #[test]
    fn max_pot_default_parameters() {
        assert_eq!(max_pot(&DrpConfig::default()), 26.0);
    }
}
