//! Best responses, average regret and exploitability in the full game.

use std::path::Path;

use crate::abstraction::RefinementMap;
use crate::cfr::{normalize, Snapshot, Solver};
use crate::game::{is_perfect_recall_for, GameTree, InfoPartition, InfosetId, NodeId, NodeKind, Profile};
use crate::verifier::{bound_constants, BoundConstants, WellFormedReport};
use crate::{Error, Result};

/// Default limit on pure strategies for exhaustive search.
pub const ENUMERATION_CAP: u128 = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct BestResponse {
    pub player: usize,
    pub value: f64,
    /// Pure strategy over the best-response partition; other players'
    /// infosets are left uniform.
    pub strategy: Profile,
}

/// π_{-i}(h) for every node: chance times the opponents' profile.
fn opponent_reach(tree: &GameTree, partition: &InfoPartition, profile: &Profile, player: usize) -> Result<Vec<f64>> {
    let mut reach = vec![0.0; tree.len()];
    reach[0] = 1.0;
    for (h, node) in tree.nodes() {
        let r = reach[h.index()];
        match &node.kind {
            NodeKind::Terminal { .. } => {}
            NodeKind::Chance { probs, .. } => {
                for (&c, &p) in node.children.iter().zip(probs) {
                    reach[c.index()] = r * p;
                }
            }
            NodeKind::Decision { player: p, .. } if *p == player => {
                for &c in &node.children {
                    reach[c.index()] = r;
                }
            }
            NodeKind::Decision { .. } => {
                let iid = partition.infoset_of(h).ok_or(Error::UnknownNode(h))?;
                for (&c, &p) in node.children.iter().zip(profile.get(iid)) {
                    reach[c.index()] = r * p;
                }
            }
        }
    }
    Ok(reach)
}

struct Expectimax<'a> {
    tree: &'a GameTree,
    partition: &'a InfoPartition,
    player: usize,
    reach: Vec<f64>,
    value: Vec<Option<f64>>,
    choice: Vec<Option<usize>>,
}

impl Expectimax<'_> {
    /// Reach-weighted value below `h` when player i best-responds.
    fn value(&mut self, h: NodeId) -> f64 {
        if let Some(v) = self.value[h.index()] {
            return v;
        }
        let tree = self.tree;
        let node = tree.node(h);
        let v = match &node.kind {
            NodeKind::Terminal { utility } => self.reach[h.index()] * utility[self.player],
            NodeKind::Decision { player, .. } if *player == self.player => {
                let iid = self.partition.infoset_of(h).expect("checked coverage");
                let a = self.decide(iid);
                self.value(node.children[a])
            }
            _ => node.children.iter().map(|&c| self.value(c)).sum(),
        };
        self.value[h.index()] = Some(v);
        v
    }

    fn decide(&mut self, iid: InfosetId) -> usize {
        if let Some(a) = self.choice[iid.index()] {
            return a;
        }
        let set = self.partition.infoset(iid);
        let mut q = vec![0.0; set.actions.len()];
        for &m in &set.members {
            for (k, &c) in self.tree.node(m).children.iter().enumerate() {
                q[k] += self.value(c);
            }
        }
        let mut best = 0;
        for (k, &v) in q.iter().enumerate() {
            if v > q[best] {
                best = k;
            }
        }
        self.choice[iid.index()] = Some(best);
        best
    }
}

/// Best response for `player` in `br_partition` (perfect recall for that
/// player) against the other players' profile on `opp_partition`.
pub fn best_response(
    tree: &GameTree,
    br_partition: &InfoPartition,
    opp_partition: &InfoPartition,
    opp_profile: &Profile,
    player: usize,
) -> Result<BestResponse> {
    if !br_partition.belongs_to(tree) || !opp_partition.belongs_to(tree) {
        return Err(Error::DifferentTrees);
    }
    if !opp_profile.matches(opp_partition) {
        return Err(Error::Precondition("profile layout does not match partition".into()));
    }
    if player >= tree.num_players() {
        return Err(Error::Precondition(format!("no player {player}")));
    }
    if !is_perfect_recall_for(tree, br_partition, player).holds {
        return Err(Error::NotPerfectRecall {
            player,
            partition: br_partition.name().to_string(),
        });
    }
    let mut e = Expectimax {
        tree,
        partition: br_partition,
        player,
        reach: opponent_reach(tree, opp_partition, opp_profile, player)?,
        value: vec![None; tree.len()],
        choice: vec![None; br_partition.len()],
    };
    let value = e.value(tree.root());
    let mut strategy = Profile::uniform(br_partition);
    let own: Vec<InfosetId> = br_partition.player_infosets(player).map(|(iid, _)| iid).collect();
    for iid in own {
        let a = e.decide(iid);
        let d = strategy.get_mut(iid);
        d.fill(0.0);
        d[a] = 1.0;
    }
    Ok(BestResponse {
        player,
        value,
        strategy,
    })
}

/// max_{σ′} u_i(σ′, σ_{-i}) with everyone's strategy on one perfect-recall
/// partition.
pub fn best_response_value(
    tree: &GameTree,
    partition: &InfoPartition,
    profile: &Profile,
    player: usize,
) -> Result<BestResponse> {
    best_response(tree, partition, partition, profile, player)
}

/// Best pure strategy for `player` in `partition` by enumeration. Works for
/// imperfect-recall partitions; refuses when the strategy count exceeds `cap`.
pub fn exhaustive_best_response(
    tree: &GameTree,
    partition: &InfoPartition,
    opp_partition: &InfoPartition,
    opp_profile: &Profile,
    player: usize,
    cap: u128,
) -> Result<BestResponse> {
    if !partition.belongs_to(tree) || !opp_partition.belongs_to(tree) {
        return Err(Error::DifferentTrees);
    }
    let own: Vec<(InfosetId, usize)> = partition
        .player_infosets(player)
        .map(|(iid, s)| (iid, s.actions.len()))
        .collect();
    let count = own.iter().try_fold(1u128, |acc, &(_, n)| acc.checked_mul(n as u128));
    match count {
        Some(c) if c <= cap => {}
        _ => {
            return Err(Error::EnumerationCap {
                count: count.unwrap_or(u128::MAX),
                cap,
            })
        }
    }
    let reach = opponent_reach(tree, opp_partition, opp_profile, player)?;
    // Own infoset slot per node, or usize::MAX elsewhere.
    let slot: std::collections::HashMap<InfosetId, usize> =
        own.iter().enumerate().map(|(k, &(iid, _))| (iid, k)).collect();
    let mut own_slot = vec![usize::MAX; tree.len()];
    for (h, node) in tree.nodes() {
        if node.player() == Some(player) {
            let iid = partition.infoset_of(h).ok_or(Error::UnknownNode(h))?;
            own_slot[h.index()] = slot[&iid];
        }
    }
    let mut pick = vec![0usize; own.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut value = vec![0.0f64; tree.len()];
    loop {
        // Children follow their parent, so a reverse sweep is bottom-up.
        for (h, node) in tree.nodes().rev() {
            value[h.index()] = match &node.kind {
                NodeKind::Terminal { utility } => reach[h.index()] * utility[player],
                _ if own_slot[h.index()] != usize::MAX => value[node.children[pick[own_slot[h.index()]]].index()],
                _ => node.children.iter().map(|c| value[c.index()]).sum(),
            };
        }
        let v = value[0];
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, pick.clone()));
        }
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == own.len() {
                let (value, choice) = best.expect("at least one strategy");
                let mut strategy = Profile::uniform(partition);
                for (&(iid, _), a) in own.iter().zip(choice) {
                    let d = strategy.get_mut(iid);
                    d.fill(0.0);
                    d[a] = 1.0;
                }
                return Ok(BestResponse {
                    player,
                    value,
                    strategy,
                });
            }
            pick[k] += 1;
            if pick[k] < own[k].1 {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
    }
}

/// Σ_i max_{σ′_i} u_i(σ′_i, σ_{-i}), best responses taken in `full`.
pub fn exploitability(
    tree: &GameTree,
    full: &InfoPartition,
    partition: &InfoPartition,
    profile: &Profile,
) -> Result<f64> {
    if !tree.is_zero_sum() {
        return Err(Error::NotZeroSum);
    }
    (0..tree.num_players())
        .map(|i| best_response(tree, full, partition, profile, i).map(|b| b.value))
        .sum()
}

/// R̄_i = max_{σ′} u_i(σ′, σ̄_{-i}) − (1/T) Σ_t u_i(σ^t).
///
/// `average` must be the reach-weighted average over a perfect-recall
/// partition, so that u_i(σ′, σ̄_{-i}) equals the average of u_i(σ′, σ^t_{-i}).
pub fn average_regret(
    tree: &GameTree,
    full: &InfoPartition,
    avg_partition: &InfoPartition,
    average: &Profile,
    utility_sum: f64,
    iterations: u64,
    player: usize,
) -> Result<f64> {
    if iterations == 0 {
        return Err(Error::Precondition("no iterations".into()));
    }
    let br = best_response(tree, full, avg_partition, average, player)?;
    Ok(br.value - utility_sum / iterations as f64)
}

/// Per-player average regret straight from stored profiles σ^1..σ^T:
/// max over pure σ′ (by expectimax on the summed opponent reach) minus the
/// mean played utility. Used to validate [`average_regret`].
pub fn direct_average_regret(
    tree: &GameTree,
    full: &InfoPartition,
    partition: &InfoPartition,
    profiles: &[Profile],
    player: usize,
) -> Result<f64> {
    if profiles.is_empty() {
        return Err(Error::Precondition("no profiles".into()));
    }
    let t = profiles.len() as f64;
    let mut reach = vec![0.0; tree.len()];
    let mut played = 0.0;
    for p in profiles {
        for (acc, r) in reach.iter_mut().zip(opponent_reach(tree, partition, p, player)?) {
            *acc += r / t;
        }
        played += crate::game::expected_utility(tree, partition, p, player) / t;
    }
    if !is_perfect_recall_for(tree, full, player).holds {
        return Err(Error::NotPerfectRecall {
            player,
            partition: full.name().to_string(),
        });
    }
    let mut e = Expectimax {
        tree,
        partition: full,
        player,
        reach,
        value: vec![None; tree.len()],
        choice: vec![None; full.len()],
    };
    Ok(e.value(tree.root()) - played)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub iteration: u64,
    pub regret: Vec<f64>,
    pub sum: f64,
    pub bound: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegretCurve {
    pub points: Vec<CurvePoint>,
}

/// Which cumulative weights a snapshot is evaluated with.
fn snapshot_average<'p>(
    snapshot: &Snapshot,
    abstract_partition: &'p InfoPartition,
    fine: Option<&'p InfoPartition>,
) -> Result<(&'p InfoPartition, Profile)> {
    match (fine, &snapshot.fine_weights) {
        (Some(f), Some(w)) => Ok((f, normalize(f, w))),
        (Some(_), None) => Err(Error::ArtifactMismatch("snapshot has no refinement tables".into())),
        (None, _) => Ok((abstract_partition, normalize(abstract_partition, &snapshot.weights))),
    }
}

impl RegretCurve {
    /// Evaluate snapshots in `full`. With `fine`, the refinement's averages
    /// are used; otherwise the abstract partition must have perfect recall.
    pub fn from_snapshots(
        tree: &GameTree,
        full: &InfoPartition,
        abstract_partition: &InfoPartition,
        fine: Option<&InfoPartition>,
        snapshots: &[Snapshot],
        bounds: Option<&[BoundConstants]>,
    ) -> Result<Self> {
        let mut points: Vec<CurvePoint> = Vec::with_capacity(snapshots.len());
        for s in snapshots {
            if points.last().is_some_and(|p| p.iteration >= s.iteration) {
                return Err(Error::Precondition("snapshots must have increasing iterations".into()));
            }
            let (part, avg) = snapshot_average(s, abstract_partition, fine)?;
            let regret = (0..tree.num_players())
                .map(|i| average_regret(tree, full, part, &avg, s.utility_sums[i], s.iteration, i))
                .collect::<Result<Vec<f64>>>()?;
            points.push(CurvePoint {
                iteration: s.iteration,
                sum: regret.iter().sum(),
                regret,
                bound: bounds.map(|b| b.iter().map(|c| c.skew_bound(s.iteration)).sum()),
            });
        }
        Ok(RegretCurve { points })
    }

    pub fn from_solver(solver: &Solver, full: &InfoPartition, bounds: Option<&[BoundConstants]>) -> Result<Self> {
        Self::from_snapshots(
            solver.tree(),
            full,
            solver.partition(),
            solver.refinement().map(RefinementMap::fine),
            solver.snapshots(),
            bounds,
        )
    }

    /// Least-squares slope of log(sum) against log(T) over points with
    /// `from <= T <= to`.
    pub fn log_log_slope(&self, from: u64, to: u64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.iteration >= from && p.iteration <= to && p.sum > 0.0)
            .map(|p| ((p.iteration as f64).ln(), p.sum.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }

    /// `iteration,regret_p1,regret_p2,regret_sum,bound`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,regret_p1,regret_p2,regret_sum,bound\n");
        for p in &self.points {
            let r = |i: usize| p.regret.get(i).map(f64::to_string).unwrap_or_default();
            let b = p.bound.map(|b| b.to_string()).unwrap_or_default();
            s += &format!("{},{},{},{},{}\n", p.iteration, r(0), r(1), p.sum, b);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Compliance {
    /// (iteration, whether each player's regret is within its bound).
    pub rows: Vec<(u64, Vec<bool>)>,
    /// The bound each player's regret approaches as T grows.
    pub floor: Vec<f64>,
}

impl Compliance {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|(_, ok)| ok.iter().all(|&b| b))
    }
}

/// Check each curve point against the bound the report admits.
pub fn bound_compliance(curve: &RegretCurve, report: &WellFormedReport, map: &RefinementMap) -> Result<Compliance> {
    let bounds = bound_constants(report, map)?;
    Ok(Compliance {
        rows: curve
            .points
            .iter()
            .map(|p| {
                let ok = bounds
                    .iter()
                    .zip(&p.regret)
                    .map(|(b, &r)| r <= b.skew_bound(p.iteration))
                    .collect();
                (p.iteration, ok)
            })
            .collect(),
        floor: bounds.iter().map(|b| b.floor).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::TreeBuilder;

    // P0 guesses heads or tails; P1 then guesses without seeing it.
    fn matching() -> (GameTree, InfoPartition) {
        let mut b = TreeBuilder::new(2).zero_sum(true);
        let root = b.decision(None, 0, &["h", "t"]);
        for x in 0..2 {
            let n = b.decision(Some(root), 1, &["h", "t"]);
            for y in 0..2 {
                let u = if x == y { 1.0 } else { -1.0 };
                b.terminal(Some(n), vec![u, -u]);
            }
        }
        let tree = b.finish();
        let part = InfoPartition::from_keys(&tree, "p", |n| tree.node(n).player().unwrap().to_string());
        (tree, part)
    }

    #[test]
    fn uniform_matching_pennies() {
        let (tree, part) = matching();
        let uni = Profile::uniform(&part);
        let br = best_response_value(&tree, &part, &uni, 0).unwrap();
        assert_eq!(br.value, 0.0);
        assert_eq!(exploitability(&tree, &part, &part, &uni).unwrap(), 0.0);
        // Skewed opponent: P1 plays h with 3/4.
        let p1 = part.find_key(1, "1").unwrap();
        let mut sk = uni.clone();
        sk.get_mut(p1).copy_from_slice(&[0.75, 0.25]);
        let br = best_response_value(&tree, &part, &sk, 0).unwrap();
        assert_eq!(br.value, 0.5);
        assert_eq!(br.strategy.get(part.find_key(0, "0").unwrap()), &[1.0, 0.0]);
        // 0.5 for P0; P1 best-responds to uniform P0 with 0.
        assert_eq!(exploitability(&tree, &part, &part, &sk).unwrap(), 0.5);
    }

    #[test]
    fn exhaustive_agrees_and_caps() {
        let (tree, part) = matching();
        let uni = Profile::uniform(&part);
        let a = exhaustive_best_response(&tree, &part, &part, &uni, 1, 10).unwrap();
        let b = best_response_value(&tree, &part, &uni, 1).unwrap();
        assert_eq!(a.value, b.value);
        assert!(matches!(
            exhaustive_best_response(&tree, &part, &part, &uni, 1, 1),
            Err(Error::EnumerationCap { count: 2, cap: 1 })
        ));
    }

    #[test]
    fn forgetful_partition_refused() {
        let mut b = TreeBuilder::new(1);
        let root = b.decision(None, 0, &["l", "r"]);
        for _ in 0..2 {
            let n = b.decision(Some(root), 0, &["x", "y"]);
            b.terminal(Some(n), vec![0.0]);
            b.terminal(Some(n), vec![1.0]);
        }
        let tree = b.finish();
        let forget = InfoPartition::from_keys(&tree, "forget", |n| if n == root { "r".into() } else { "k".into() });
        let uni = Profile::uniform(&forget);
        assert!(matches!(
            best_response_value(&tree, &forget, &uni, 0),
            Err(Error::NotPerfectRecall { .. })
        ));
        assert_eq!(
            exhaustive_best_response(&tree, &forget, &forget, &uni, 0, 10)
                .unwrap()
                .value,
            1.0
        );
    }
}
