//! Decide whether an abstraction is well-formed, skew well-formed or nearly
//! well-formed with respect to a perfect-recall refinement, and derive the
//! regret-bound constants that follow.
//!
//! Fine infosets merged into one coarse infoset are checked in pairs (Ĭ, Ĭ′).
//! Conditions are tested as exact multiset equalities over the terminals
//! below each side:
//!
//! - (iii) opponent sequences X_{-i}(z) in the abstract game,
//! - (iv) own sequences X_i(z[Ĭ], z), or an isomorphism (ψ, ω) of them,
//! - (ii) chance reach, with ℓ fixed by the ratio of the fibers' total mass,
//! - (i) utilities, with k fixed by the ratio of largest magnitudes.
//!
//! Within a class of terminals that agree on everything but utility, pairing
//! both sides in sorted order is optimal for any k > 0, so no search over
//! bijections is needed for the first two checks.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, One, ToPrimitive, Zero};

use crate::abstraction::RefinementMap;
use crate::game::{GameTree, InfoPartition, InfosetId, Label, NodeId, NodeKind, PathProb};
use crate::{Error, Result};

/// Relative tolerance for utility proportionality.
pub const UTILITY_TOLERANCE: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Check {
    Well,
    Skew,
    Nearly,
}

impl Check {
    fn verdict(self) -> Verdict {
        match self {
            Check::Well => Verdict::WellFormed,
            Check::Skew => Verdict::SkewWellFormed,
            Check::Nearly => Verdict::NearlyWellFormed,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    WellFormed,
    SkewWellFormed,
    NearlyWellFormed,
    NotWellFormed,
    /// Some pair could not be settled; no verdict is claimed.
    Undecided,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::WellFormed => "WELL_FORMED",
            Verdict::SkewWellFormed => "SKEW_WELL_FORMED",
            Verdict::NearlyWellFormed => "NEARLY_WELL_FORMED",
            Verdict::NotWellFormed => "NOT_WELL_FORMED",
            Verdict::Undecided => "UNDECIDED",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Condition {
    Utility,
    Chance,
    Opponent,
    Own,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Utility => "(i)",
            Condition::Chance => "(ii)",
            Condition::Opponent => "(iii)",
            Condition::Own => "(iv)",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub condition: Condition,
    /// A terminal on one side with no admissible counterpart.
    pub terminal: Option<NodeId>,
    pub detail: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "condition {} fails", self.condition)?;
        if let Some(z) = self.terminal {
            write!(f, " at terminal {z}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Pass,
    Fail(Witness),
    Undecided(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairReport {
    pub player: usize,
    pub coarse: InfosetId,
    pub fine_a: InfosetId,
    pub fine_b: InfosetId,
    pub outcome: Outcome,
    pub k: Option<f64>,
    pub l: Option<f64>,
    pub l_exact: Option<PathProb>,
    /// Smallest utility slack found (0 for well-formed pairs).
    pub delta: Option<f64>,
    /// ψ for nearly well-formed pairs, as abstract-partition infosets below
    /// each side; ω maps each action to the one at the same position.
    pub psi: Vec<(InfosetId, InfosetId)>,
}

impl PairReport {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    /// k·ℓ, when both are known.
    pub fn kl(&self) -> Option<f64> {
        Some(self.k? * self.l?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WellFormedReport {
    pub check: Check,
    pub verdict: Verdict,
    pub coarse_name: String,
    pub fine_name: String,
    /// False when pairs were only checked against one base per group, so the
    /// reverse and cross pairs are not listed.
    pub all_pairs: bool,
    pub pairs: Vec<PairReport>,
}

impl WellFormedReport {
    pub fn holds(&self) -> bool {
        self.verdict == self.check.verdict()
    }

    pub fn first_failure(&self) -> Option<(&PairReport, &Witness)> {
        self.pairs.iter().find_map(|p| match &p.outcome {
            Outcome::Fail(w) => Some((p, w)),
            _ => None,
        })
    }

    /// Largest slack over all pairs.
    pub fn max_delta(&self) -> f64 {
        self.pairs.iter().filter_map(|p| p.delta).fold(0.0, f64::max)
    }

    /// Plain-text summary, one line per failing or undecided pair.
    pub fn to_text(&self, coarse: &InfoPartition, fine: &InfoPartition) -> String {
        let mut s = format!(
            "check {:?} of `{}` against `{}`: {}\npairs checked: {}\n",
            self.check,
            self.coarse_name,
            self.fine_name,
            self.verdict,
            self.pairs.len()
        );
        if self.pairs.iter().any(|p| p.passed()) {
            let max_kl = self.pairs.iter().filter_map(|p| p.kl()).fold(0.0, f64::max);
            s += &format!("max k*l: {max_kl}\nmax delta: {}\n", self.max_delta());
        }
        for p in &self.pairs {
            let head = format!(
                "  {} | {} vs {}",
                coarse.infoset(p.coarse).key,
                fine.infoset(p.fine_a).key,
                fine.infoset(p.fine_b).key
            );
            match &p.outcome {
                Outcome::Pass => {}
                Outcome::Fail(w) => s += &format!("{head}: {w}\n"),
                Outcome::Undecided(why) => s += &format!("{head}: undecided: {why}\n"),
            }
        }
        s
    }

    /// `coarse_infoset,fine_a,fine_b,k,l,delta,verdict,witness`.
    pub fn write_csv(&self, path: &Path, coarse: &InfoPartition, fine: &InfoPartition) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record([
            "coarse_infoset",
            "fine_a",
            "fine_b",
            "k",
            "l",
            "delta",
            "verdict",
            "witness",
        ])
        .map_err(|e| Error::csv(path, e))?;
        let num = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for p in &self.pairs {
            let (verdict, witness) = match &p.outcome {
                Outcome::Pass => ("pass", String::new()),
                Outcome::Fail(wit) => ("fail", wit.to_string()),
                Outcome::Undecided(why) => ("undecided", why.clone()),
            };
            let l = match &p.l_exact {
                Some(r) => r.to_string(),
                None => num(p.l),
            };
            w.write_record([
                coarse.infoset(p.coarse).key.as_str(),
                &fine.infoset(p.fine_a).key,
                &fine.infoset(p.fine_b).key,
                &num(p.k),
                &l,
                &num(p.delta),
                verdict,
                &witness,
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn check_well_formed(map: &RefinementMap) -> Result<WellFormedReport> {
    Verifier::new(map)?.run(Check::Well)
}

pub fn check_skew_well_formed(map: &RefinementMap) -> Result<WellFormedReport> {
    Verifier::new(map)?.run(Check::Skew)
}

pub fn check_nearly_well_formed(map: &RefinementMap) -> Result<WellFormedReport> {
    Verifier::new(map)?.run(Check::Nearly)
}

/// The strongest of the three properties that holds, trying well-formed,
/// then skew, then nearly. Returns the deciding report.
pub fn classify(map: &RefinementMap) -> Result<WellFormedReport> {
    let v = Verifier::new(map)?;
    let well = v.run(Check::Well)?;
    if well.holds() {
        return Ok(well);
    }
    // (ii) and (iii) are shared by all three properties.
    let failed = |r: &WellFormedReport| r.first_failure().map(|(_, w)| w.condition);
    if matches!(failed(&well), Some(Condition::Chance | Condition::Opponent)) {
        return Ok(well);
    }
    if failed(&well) == Some(Condition::Utility) {
        let skew = v.run(Check::Skew)?;
        if skew.holds() {
            return Ok(skew);
        }
    }
    let nearly = v.run(Check::Nearly)?;
    if nearly.holds() || nearly.verdict == Verdict::Undecided {
        return Ok(nearly);
    }
    Ok(well)
}

/// Constants for one player's average-regret bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundConstants {
    pub player: usize,
    /// Δ_i, the range of the player's utilities.
    pub utility_range: f64,
    /// K = Σ_I max k·ℓ over ordered pairs in P̆(I), at least 1 per infoset.
    pub k_sum: f64,
    /// |A_i| = max_I |A(I)|.
    pub max_actions: usize,
    /// Σ_I |P̆(I)| δ_I with δ_I = max δ·ℓ over pairs.
    pub floor: f64,
}

impl BoundConstants {
    /// Δ_i K √|A_i| / √T.
    pub fn regret_bound(&self, t: u64) -> f64 {
        self.utility_range * self.k_sum * (self.max_actions as f64).sqrt() / (t as f64).sqrt()
    }

    /// The regret bound plus the skew floor.
    pub fn skew_bound(&self, t: u64) -> f64 {
        self.regret_bound(t) + self.floor
    }
}

/// Per-player bound constants. Refused unless the report's property holds.
pub fn bound_constants(report: &WellFormedReport, map: &RefinementMap) -> Result<Vec<BoundConstants>> {
    if !report.holds() {
        return Err(Error::NoGuarantee(format!(
            "verdict is {} under the {:?} check",
            report.verdict, report.check
        )));
    }
    let tree = map.tree();
    let coarse = map.coarse();
    // Per coarse infoset: max k·ℓ over ordered pairs and max δ·ℓ.
    let mut by_coarse: HashMap<InfosetId, (f64, f64)> = HashMap::new();
    if report.all_pairs {
        for p in &report.pairs {
            let e = by_coarse.entry(p.coarse).or_insert((1.0, 0.0));
            e.0 = e.0.max(p.kl().unwrap_or(1.0));
            e.1 = e.1.max(p.delta.unwrap_or(0.0) * p.l.unwrap_or(1.0));
        }
    } else {
        // Star pairs j → base give c_j = k·ℓ; any pair (a, b) has c_a / c_b.
        let mut range: HashMap<InfosetId, (f64, f64)> = HashMap::new();
        for p in &report.pairs {
            let c = p.kl().unwrap_or(1.0);
            let e = range.entry(p.coarse).or_insert((1.0, 1.0));
            e.0 = e.0.min(c);
            e.1 = e.1.max(c);
        }
        for (iid, (lo, hi)) in range {
            by_coarse.insert(iid, (hi / lo, 0.0));
        }
    }
    Ok((0..tree.num_players())
        .map(|i| {
            let (mut k_sum, mut floor) = (0.0, 0.0);
            for (iid, _) in coarse.player_infosets(i) {
                let (kl, d) = by_coarse.get(&iid).copied().unwrap_or((1.0, 0.0));
                k_sum += kl;
                floor += map.group(iid).len() as f64 * d;
            }
            BoundConstants {
                player: i,
                utility_range: tree.utility_range(i),
                k_sum,
                max_actions: coarse.max_actions(i),
                floor,
            }
        })
        .collect())
}

/// Interned (infoset, action) sequences; id 0 is the empty sequence.
struct SeqTrie {
    nodes: Vec<(u32, InfosetId, Label)>,
    index: HashMap<(u32, InfosetId, Label), u32>,
}

impl SeqTrie {
    fn new() -> Self {
        SeqTrie {
            nodes: vec![(0, InfosetId::new(0), Label::default())],
            index: HashMap::new(),
        }
    }

    fn push(&mut self, parent: u32, iid: InfosetId, label: Label) -> u32 {
        let next = self.nodes.len() as u32;
        *self.index.entry((parent, iid, label)).or_insert_with(|| {
            self.nodes.push((parent, iid, label));
            next
        })
    }

    fn items(&self, mut id: u32) -> Vec<(InfosetId, Label)> {
        let mut out = Vec::new();
        while id != 0 {
            let (p, iid, l) = self.nodes[id as usize];
            out.push((iid, l));
            id = p;
        }
        out.reverse();
        out
    }

    fn render(&self, id: u32, tree: &GameTree, partition: &InfoPartition) -> String {
        let items: Vec<String> = self
            .items(id)
            .into_iter()
            .map(|(iid, l)| format!("({}, {})", partition.infoset(iid).key, tree.label(l)))
            .collect();
        format!("[{}]", items.join(" "))
    }
}

#[derive(Clone, Debug)]
struct Term {
    z: NodeId,
    opp: u32,
    own: u32,
    pc: PathProb,
    u: f64,
    /// Own decisions from z[Ĭ] to z, as (infoset, action position).
    own_raw: Vec<(InfosetId, u32)>,
}

/// Precomputed terminal data for the merged groups of a refinement.
pub struct Verifier<'a> {
    map: &'a RefinementMap<'a>,
    trie: SeqTrie,
    fibers: HashMap<InfosetId, Vec<Term>>,
}

fn overflow() -> Error {
    Error::Precondition("chance probabilities overflow exact arithmetic".into())
}

fn exact_edge(p: f64) -> Result<PathProb> {
    let r = Ratio::<i64>::approximate_float(p).ok_or_else(overflow)?;
    Ok(PathProb::new(*r.numer() as u128, *r.denom() as u128))
}

impl<'a> Verifier<'a> {
    pub fn new(map: &'a RefinementMap<'a>) -> Result<Self> {
        let tree = map.tree();
        let coarse = map.coarse();
        let np = tree.num_players();
        let mut trie = SeqTrie::new();

        // X_{-i}(h) and π_c(h) top-down; parents precede children.
        let mut opp = vec![vec![0u32; tree.len()]; np];
        let mut pc = vec![PathProb::zero(); tree.len()];
        pc[0] = PathProb::one();
        for (h, node) in tree.nodes() {
            let hi = h.index();
            match &node.kind {
                NodeKind::Terminal { .. } => {}
                NodeKind::Chance { probs, exact, .. } => {
                    for (k, &c) in node.children.iter().enumerate() {
                        let edge = match exact {
                            Some(e) => PathProb::new(u128::from(*e[k].numer()), u128::from(*e[k].denom())),
                            None => exact_edge(probs[k])?,
                        };
                        pc[c.index()] = pc[hi].checked_mul(&edge).ok_or_else(overflow)?;
                        for seq in opp.iter_mut() {
                            seq[c.index()] = seq[hi];
                        }
                    }
                }
                NodeKind::Decision { player, actions } => {
                    let iid = coarse.infoset_of(h).ok_or(Error::UnknownNode(h))?;
                    for (k, &c) in node.children.iter().enumerate() {
                        pc[c.index()] = pc[hi];
                        for (i, seq) in opp.iter_mut().enumerate() {
                            seq[c.index()] = if i == *player {
                                seq[hi]
                            } else {
                                trie.push(seq[hi], iid, actions[k])
                            };
                        }
                    }
                }
            }
        }

        let mut fibers = HashMap::new();
        for (_, group) in map.merged() {
            for &fid in group {
                let set = map.fine().infoset(fid);
                let i = set.player;
                let mut terms = Vec::new();
                for &m in &set.members {
                    // (node, own sequence id, raw own sequence)
                    let mut stack = vec![(m, 0u32, Vec::new())];
                    while let Some((h, own, raw)) = stack.pop() {
                        let node = tree.node(h);
                        match &node.kind {
                            NodeKind::Terminal { utility } => terms.push(Term {
                                z: h,
                                opp: opp[i][h.index()],
                                own,
                                pc: pc[h.index()],
                                u: utility[i],
                                own_raw: raw,
                            }),
                            NodeKind::Decision { player, actions } if *player == i => {
                                let iid = coarse.infoset_of(h).ok_or(Error::UnknownNode(h))?;
                                for (k, &c) in node.children.iter().enumerate().rev() {
                                    let mut r = raw.clone();
                                    r.push((iid, k as u32));
                                    stack.push((c, trie.push(own, iid, actions[k]), r));
                                }
                            }
                            _ => {
                                for &c in node.children.iter().rev() {
                                    stack.push((c, own, raw.clone()));
                                }
                            }
                        }
                    }
                }
                fibers.insert(fid, terms);
            }
        }
        Ok(Verifier { map, trie, fibers })
    }

    /// Check every merged group. Well-formedness and near well-formedness
    /// are transitive (bijections compose, constants multiply), so each fine
    /// infoset is compared against the first of its group. Skew slack is not
    /// transitive: once the exact conditions hold for a group, every ordered
    /// pair is measured.
    pub fn run(&self, check: Check) -> Result<WellFormedReport> {
        let mut pairs = Vec::new();
        let mut all_pairs = true;
        for (cid, group) in self.map.merged() {
            let base = group[0];
            let start = pairs.len();
            for &j in &group[1..] {
                pairs.push(self.check_pair(check, cid, j, base)?);
            }
            let ok = pairs[start..].iter().all(PairReport::passed);
            if check == Check::Skew && ok {
                for &a in group {
                    for &b in group {
                        if a != b && b != base {
                            pairs.push(self.check_pair(check, cid, a, b)?);
                        }
                    }
                }
            } else {
                all_pairs = false;
            }
        }
        let verdict = if pairs.iter().any(|p| matches!(p.outcome, Outcome::Fail(_))) {
            Verdict::NotWellFormed
        } else if pairs.iter().any(|p| matches!(p.outcome, Outcome::Undecided(_))) {
            Verdict::Undecided
        } else {
            check.verdict()
        };
        Ok(WellFormedReport {
            check,
            verdict,
            coarse_name: self.map.coarse().name().to_string(),
            fine_name: self.map.fine().name().to_string(),
            all_pairs,
            pairs,
        })
    }

    /// Check one ordered pair of fine infosets inside coarse infoset `coarse`.
    pub fn check_pair(&self, check: Check, coarse: InfosetId, a: InfosetId, b: InfosetId) -> Result<PairReport> {
        let group = self.map.group(coarse);
        if !group.contains(&a) || !group.contains(&b) {
            return Err(Error::Precondition(format!("{a} and {b} are not both inside {coarse}")));
        }
        let player = self.map.coarse().infoset(coarse).player;
        let mut report = PairReport {
            player,
            coarse,
            fine_a: a,
            fine_b: b,
            outcome: Outcome::Pass,
            k: None,
            l: None,
            l_exact: None,
            delta: None,
            psi: Vec::new(),
        };
        let (za, zb) = (&self.fibers[&a], &self.fibers[&b]);
        let tree = self.map.tree();
        let coarse_part = self.map.coarse();
        let fail = |condition, z: NodeId, detail: String| {
            Outcome::Fail(Witness {
                condition,
                terminal: Some(z),
                detail,
            })
        };

        // (iii)
        let mismatch = first_mismatch(za, zb, |t| t.opp);
        if let Some((t, side)) = mismatch {
            report.outcome = fail(
                Condition::Opponent,
                t.z,
                format!(
                    "opponent sequence {} occurs more often below {}",
                    self.trie.render(t.opp, tree, coarse_part),
                    side_key(self.map.fine(), a, b, side)
                ),
            );
            return Ok(report);
        }

        // (iv), exact form
        if check != Check::Nearly {
            if let Some((t, side)) = first_mismatch(za, zb, |t| (t.opp, t.own)) {
                report.outcome = fail(
                    Condition::Own,
                    t.z,
                    format!(
                        "own sequence {} after opponent sequence {} occurs more often below {}",
                        self.trie.render(t.own, tree, coarse_part),
                        self.trie.render(t.opp, tree, coarse_part),
                        side_key(self.map.fine(), a, b, side)
                    ),
                );
                return Ok(report);
            }
        }

        // (ii)
        let sum = |ts: &[Term]| -> Result<PathProb> {
            ts.iter()
                .try_fold(PathProb::zero(), |acc, t| acc.checked_add(&t.pc))
                .ok_or_else(overflow)
        };
        let (sa, sb) = (sum(za)?, sum(zb)?);
        let l = if sb.is_zero() {
            if !sa.is_zero() {
                report.outcome = fail(Condition::Chance, za[0].z, "one side is never reached by chance".into());
                return Ok(report);
            }
            PathProb::one()
        } else {
            sa.checked_div(&sb).ok_or_else(overflow)?
        };
        report.l = l.to_f64();
        report.l_exact = Some(l);
        let scaled: Vec<PathProb> = zb
            .iter()
            .map(|t| t.pc.checked_mul(&l).ok_or_else(overflow))
            .collect::<Result<_>>()?;
        let own_key = |t: &Term| if check == Check::Nearly { 0 } else { t.own };
        let mut ia: Vec<usize> = (0..za.len()).collect();
        let mut ib: Vec<usize> = (0..zb.len()).collect();
        ia.sort_by(|&x, &y| {
            let (p, q) = (&za[x], &za[y]);
            (p.opp, own_key(p), p.pc)
                .cmp(&(q.opp, own_key(q), q.pc))
                .then(p.u.total_cmp(&q.u))
        });
        ib.sort_by(|&x, &y| {
            let (p, q) = (&zb[x], &zb[y]);
            (p.opp, own_key(p), scaled[x])
                .cmp(&(q.opp, own_key(q), scaled[y]))
                .then(p.u.total_cmp(&q.u))
        });
        for (&x, &y) in ia.iter().zip(&ib) {
            if za[x].pc != scaled[y] {
                let (t, other) = if za[x].pc < scaled[y] { (&za[x], b) } else { (&zb[y], a) };
                report.outcome = fail(
                    Condition::Chance,
                    t.z,
                    format!(
                        "no terminal below {} has chance reach in ratio {l} to {}",
                        self.map.fine().infoset(other).key,
                        t.pc
                    ),
                );
                return Ok(report);
            }
        }

        // (i)
        let max_abs = |ts: &[Term]| ts.iter().fold(0.0f64, |m, t| m.max(t.u.abs()));
        let (ma, mb) = (max_abs(za), max_abs(zb));
        let k0 = if ma == 0.0 && mb == 0.0 { 1.0 } else { ma / mb };
        let pairs: Vec<(f64, f64)> = ia.iter().zip(&ib).map(|(&x, &y)| (za[x].u, zb[y].u)).collect();
        match check {
            Check::Well | Check::Nearly => {
                let bad = if ma == 0.0 || mb == 0.0 {
                    (ma != mb).then(|| {
                        ia.iter()
                            .zip(&ib)
                            .find(|(&x, &y)| za[x].u != zb[y].u)
                            .expect("some utility differs")
                    })
                } else {
                    ia.iter().zip(&ib).find(|(&x, &y)| !close(za[x].u, k0 * zb[y].u))
                };
                if let Some((&x, &y)) = bad {
                    report.outcome = fail(
                        Condition::Utility,
                        za[x].z,
                        format!(
                            "utility {} is not {} times utility {} at terminal {}",
                            za[x].u, k0, zb[y].u, zb[y].z
                        ),
                    );
                    return Ok(report);
                }
                report.k = Some(k0);
                report.delta = Some(0.0);
            }
            Check::Skew => {
                let (k, delta) = min_slack(&pairs, k0);
                report.k = Some(k);
                report.delta = Some(delta);
            }
        }

        if check == Check::Nearly {
            match self.match_own(za, zb, &scaled, k0) {
                Ok(psi) => report.psi = psi,
                Err(outcome) => report.outcome = outcome,
            }
        }
        Ok(report)
    }

    /// Find ψ mapping the own-sequence trie below Ĭ onto the one below Ĭ′,
    /// with ω the positional action map.
    fn match_own(
        &self,
        za: &[Term],
        zb: &[Term],
        scaled: &[PathProb],
        k: f64,
    ) -> Result<Vec<(InfosetId, InfosetId)>, Outcome> {
        let mut colors: HashMap<(u32, PathProb, i64), u64> = HashMap::new();
        let mut color = |opp: u32, pc: PathProb, u: f64| {
            let next = colors.len() as u64;
            *colors.entry((opp, pc, quantize(u))).or_insert(next)
        };
        let ca: Vec<u64> = za.iter().map(|t| color(t.opp, t.pc, t.u)).collect();
        let cb: Vec<u64> = zb.iter().zip(scaled).map(|(t, &s)| color(t.opp, s, k * t.u)).collect();
        let coarse = self.map.coarse();
        let ta = OwnTrie::build(za, &ca);
        let tb = OwnTrie::build(zb, &cb);
        let mut hashes = HashMap::new();
        let ha = ta.hashes(&mut hashes, true);
        let hb = tb.hashes(&mut hashes, true);
        if ha[0] != hb[0] {
            let mut loose = HashMap::new();
            let la = ta.hashes(&mut loose, false);
            let lb = tb.hashes(&mut loose, false);
            if la[0] == lb[0] {
                return Err(Outcome::Undecided(
                    "own sequences match only under an action permutation".into(),
                ));
            }
            return Err(Outcome::Fail(Witness {
                condition: Condition::Own,
                terminal: None,
                detail: "own decision structures below the two sides are not isomorphic".into(),
            }));
        }
        let mut psi: HashMap<InfosetId, InfosetId> = HashMap::new();
        let mut inv: HashMap<InfosetId, InfosetId> = HashMap::new();
        let mut tied = false;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((p, q)) = stack.pop() {
            let kids = |t: &OwnTrie, h: &[u64], n: usize| {
                let mut v: Vec<((u32, usize, u64), InfosetId, usize)> = t.children[n]
                    .iter()
                    .map(|&((iid, pos), c)| ((pos, coarse.infoset(iid).actions.len(), h[c]), iid, c))
                    .collect();
                v.sort_by_key(|e| e.0);
                v
            };
            let (ka, kb) = (kids(&ta, &ha, p), kids(&tb, &hb, q));
            tied |= ka.windows(2).any(|w| w[0].0 == w[1].0);
            for (x, y) in ka.iter().zip(&kb) {
                let (ja, jb) = (x.1, y.1);
                if *psi.entry(ja).or_insert(jb) != jb || *inv.entry(jb).or_insert(ja) != ja {
                    return Err(if tied {
                        Outcome::Undecided("tied subtrees; pairing would need exhaustive search".into())
                    } else {
                        Outcome::Fail(Witness {
                            condition: Condition::Own,
                            terminal: None,
                            detail: format!(
                                "infoset {} would have to map to two different infosets",
                                coarse.infoset(ja).key
                            ),
                        })
                    });
                }
                stack.push((x.2, y.2));
            }
        }
        let mut out: Vec<_> = psi.into_iter().collect();
        out.sort();
        Ok(out)
    }
}

/// Prefix tree of raw own sequences, with terminal colors attached.
struct OwnTrie {
    children: Vec<Vec<((InfosetId, u32), usize)>>,
    colors: Vec<Vec<u64>>,
}

impl OwnTrie {
    fn build(terms: &[Term], colors: &[u64]) -> Self {
        let mut t = OwnTrie {
            children: vec![Vec::new()],
            colors: vec![Vec::new()],
        };
        let mut index: HashMap<(usize, InfosetId, u32), usize> = HashMap::new();
        for (term, &c) in terms.iter().zip(colors) {
            let mut n = 0;
            for &(iid, pos) in &term.own_raw {
                n = match index.get(&(n, iid, pos)) {
                    Some(&m) => m,
                    None => {
                        let m = t.children.len();
                        t.children.push(Vec::new());
                        t.colors.push(Vec::new());
                        t.children[n].push(((iid, pos), m));
                        index.insert((n, iid, pos), m);
                        m
                    }
                };
            }
            t.colors[n].push(c);
        }
        t
    }

    /// Name-free subtree hashes; children are created after their parents.
    fn hashes(&self, intern: &mut HashMap<Vec<u64>, u64>, with_positions: bool) -> Vec<u64> {
        let mut h = vec![0u64; self.children.len()];
        for n in (0..self.children.len()).rev() {
            let mut cs = self.colors[n].clone();
            cs.sort_unstable();
            let mut kids: Vec<[u64; 2]> = self.children[n]
                .iter()
                .map(|&((_, pos), c)| [if with_positions { u64::from(pos) } else { 0 }, h[c]])
                .collect();
            kids.sort_unstable();
            let mut key = vec![cs.len() as u64];
            key.extend(cs);
            key.extend(kids.into_iter().flatten());
            let next = intern.len() as u64;
            h[n] = *intern.entry(key).or_insert(next);
        }
        h
    }
}

fn side_key(fine: &InfoPartition, a: InfosetId, b: InfosetId, side: Side) -> String {
    fine.infoset(if side == Side::A { a } else { b }).key.clone()
}

#[derive(Copy, Clone, PartialEq, Eq)]
enum Side {
    A,
    B,
}

/// The first key, in sorted order, whose multiplicity differs between the
/// sides, with a terminal carrying it on the side where it is more common.
fn first_mismatch<'t, K: Ord + Copy>(
    za: &'t [Term],
    zb: &'t [Term],
    key: impl Fn(&Term) -> K,
) -> Option<(&'t Term, Side)> {
    let mut a: Vec<(K, usize)> = za.iter().enumerate().map(|(i, t)| (key(t), i)).collect();
    let mut b: Vec<(K, usize)> = zb.iter().enumerate().map(|(i, t)| (key(t), i)).collect();
    a.sort_unstable();
    b.sort_unstable();
    for (x, y) in a.iter().zip(&b) {
        if x.0 < y.0 {
            return Some((&za[x.1], Side::A));
        }
        if y.0 < x.0 {
            return Some((&zb[y.1], Side::B));
        }
    }
    match a.len().cmp(&b.len()) {
        std::cmp::Ordering::Greater => Some((&za[a[b.len()].1], Side::A)),
        std::cmp::Ordering::Less => Some((&zb[b[a.len()].1], Side::B)),
        std::cmp::Ordering::Equal => None,
    }
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= UTILITY_TOLERANCE * x.abs().max(y.abs()).max(1.0)
}

fn quantize(u: f64) -> i64 {
    (u / UTILITY_TOLERANCE).round() as i64
}

/// max_j |a_j − k b_j| for sorted pairings.
fn slack(pairs: &[(f64, f64)], k: f64) -> f64 {
    pairs.iter().fold(0.0, |m, &(a, b)| m.max((a - k * b).abs()))
}

/// Minimize the slack over k ≥ 0. The objective is convex in k, so a golden
/// section search over a bracket that must contain the minimum suffices.
/// Returns (k, slack at k).
fn min_slack(pairs: &[(f64, f64)], k0: f64) -> (f64, f64) {
    let mut best = (1.0, slack(pairs, 1.0));
    let s0 = slack(pairs, k0);
    if s0 < best.1 {
        best = (k0, s0);
    }
    if best.1 <= UTILITY_TOLERANCE {
        return (best.0, 0.0);
    }
    let max_a = pairs.iter().fold(0.0f64, |m, p| m.max(p.0.abs()));
    let min_b = pairs
        .iter()
        .filter(|p| p.1 != 0.0)
        .fold(f64::INFINITY, |m, p| m.min(p.1.abs()));
    if min_b.is_finite() {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (0.0, (2.0 * max_a + 1.0) / min_b);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut f1, mut f2) = (slack(pairs, x1), slack(pairs, x2));
        for _ in 0..200 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = slack(pairs, x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = slack(pairs, x2);
            }
        }
        for k in [x1, x2, lo, hi] {
            let s = slack(pairs, k);
            if s < best.1 {
                best = (k, s);
            }
        }
    }
    best
}
