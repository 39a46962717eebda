//! Counterfactual regret minimization over flat per-infoset tables.
//!
//! Both players update simultaneously from one traversal per iteration. When
//! a [`RefinementMap`] is supplied, regrets and average-strategy weights are
//! also accumulated at the refinement's infosets under the same σ^t; those
//! tables never influence play.

mod dump;
mod traverse;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use dump::{
    read_checkpoint, read_checkpoint_rows, read_utilities, write_checkpoint, write_utilities, CheckpointRow,
};
pub(crate) use traverse::{backward, forward, Flat, Layout};
pub use traverse::{counterfactual_action_values, counterfactual_value};

use crate::abstraction::RefinementMap;
use crate::game::{GameTree, InfoPartition, InfosetId, Profile};
use crate::{Error, Result};

/// σ(a) ∝ max(R(a), 0), uniform when no regret is positive.
pub fn regret_matching(regrets: &[f64]) -> Result<Vec<f64>> {
    if regrets.is_empty() {
        return Err(Error::EmptyActions);
    }
    let mut out = vec![0.0; regrets.len()];
    regret_matching_into(regrets, &mut out);
    Ok(out)
}

#[inline]
fn regret_matching_into(regrets: &[f64], out: &mut [f64]) {
    let total: f64 = regrets.iter().map(|r| r.max(0.0)).sum();
    if total > 0.0 {
        for (o, r) in out.iter_mut().zip(regrets) {
            *o = r.max(0.0) / total;
        }
    } else {
        out.fill(1.0 / regrets.len() as f64);
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Variant {
    Vanilla,
    ChanceSampled,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Variant::Vanilla),
            "chance" | "chance-sampled" | "cs" => Ok(Variant::ChanceSampled),
            _ => Err(Error::InvalidConfig(format!("unknown CFR variant `{s}`"))),
        }
    }
}

/// Iterations at which snapshots are kept. The final iteration is always kept.
#[derive(Clone, Debug, PartialEq)]
pub enum Schedule {
    PowersOfTwo,
    Every(u64),
    At(Vec<u64>),
}

impl Schedule {
    pub fn contains(&self, t: u64, last: u64) -> bool {
        t == last
            || match self {
                Schedule::PowersOfTwo => t.is_power_of_two(),
                Schedule::Every(n) => *n > 0 && t.is_multiple_of(*n),
                Schedule::At(list) => list.contains(&t),
            }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CfrConfig {
    pub variant: Variant,
    pub iterations: u64,
    pub seed: u64,
    /// Update players one after another, each seeing the other's new strategy.
    pub alternating: bool,
    pub schedule: Schedule,
    /// Keep σ^t for every iteration (test oracles only).
    pub record_profiles: bool,
}

impl Default for CfrConfig {
    fn default() -> Self {
        CfrConfig {
            variant: Variant::Vanilla,
            iterations: 1000,
            seed: 0,
            alternating: false,
            schedule: Schedule::PowersOfTwo,
            record_profiles: false,
        }
    }
}

impl CfrConfig {
    pub fn vanilla(iterations: u64) -> Self {
        CfrConfig {
            iterations,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Cumulative tables after some iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub iteration: u64,
    pub regrets: Vec<f64>,
    pub weights: Vec<f64>,
    /// Refinement tables, when a refinement is tracked.
    pub fine_regrets: Option<Vec<f64>>,
    pub fine_weights: Option<Vec<f64>>,
    /// Σ_t u_i(σ^t) per player.
    pub utility_sums: Vec<f64>,
}

struct Tables {
    layout: Layout,
    regrets: Vec<f64>,
    weights: Vec<f64>,
}

impl Tables {
    fn new(tree: &GameTree, partition: &InfoPartition) -> Self {
        let n = Profile::uniform(partition).flat().len();
        Tables {
            layout: Layout::new(tree, partition),
            regrets: vec![0.0; n],
            weights: vec![0.0; n],
        }
    }
}

pub struct Solver<'a> {
    tree: &'a GameTree,
    partition: &'a InfoPartition,
    refinement: Option<&'a RefinementMap<'a>>,
    config: CfrConfig,
    main: Tables,
    fine: Option<Tables>,
    sigma: Profile,
    t: u64,
    utility_sums: Vec<f64>,
    snapshots: Vec<Snapshot>,
    profiles: Vec<Profile>,
    reach: Vec<f64>,
    values: Vec<f64>,
    visited: Vec<u32>,
    flat: Flat,
    sampled: Vec<u32>,
}

impl<'a> Solver<'a> {
    pub fn new(
        tree: &'a GameTree,
        partition: &'a InfoPartition,
        refinement: Option<&'a RefinementMap<'a>>,
        config: CfrConfig,
    ) -> Result<Self> {
        config.validate()?;
        if !partition.belongs_to(tree) {
            return Err(Error::DifferentTrees);
        }
        partition.ensure_valid(tree)?;
        if let Some(r) = refinement {
            if !std::ptr::eq(r.coarse(), partition) && r.coarse().tree_id() != partition.tree_id() {
                return Err(Error::DifferentTrees);
            }
            if r.tree().id() != tree.id() {
                return Err(Error::DifferentTrees);
            }
        }
        Ok(Solver {
            tree,
            partition,
            refinement,
            main: Tables::new(tree, partition),
            fine: refinement.map(|r| Tables::new(tree, r.fine())),
            sigma: Profile::uniform(partition),
            t: 0,
            utility_sums: vec![0.0; tree.num_players()],
            snapshots: Vec::new(),
            profiles: Vec::new(),
            reach: Vec::new(),
            values: Vec::new(),
            visited: Vec::new(),
            sampled: vec![0; tree.len()],
            flat: Flat::new(tree),
            config,
        })
    }

    /// Continue from saved tables; the next iteration is `snapshot.iteration + 1`.
    pub fn resume(&mut self, snapshot: &Snapshot) -> Result<()> {
        let mismatch = |what: &str| Error::ArtifactMismatch(format!("{what} has the wrong length"));
        if snapshot.regrets.len() != self.main.regrets.len() || snapshot.weights.len() != self.main.weights.len() {
            return Err(mismatch("abstract table"));
        }
        if snapshot.utility_sums.len() != self.utility_sums.len() {
            return Err(mismatch("utility sums"));
        }
        self.main.regrets.clone_from(&snapshot.regrets);
        self.main.weights.clone_from(&snapshot.weights);
        if let Some(fine) = &mut self.fine {
            match (&snapshot.fine_regrets, &snapshot.fine_weights) {
                (Some(r), Some(w)) if r.len() == fine.regrets.len() && w.len() == fine.weights.len() => {
                    fine.regrets.clone_from(r);
                    fine.weights.clone_from(w);
                }
                _ => return Err(mismatch("refinement table")),
            }
        }
        self.utility_sums.clone_from(&snapshot.utility_sums);
        self.t = snapshot.iteration;
        self.refresh_sigma(None);
        Ok(())
    }

    pub fn config(&self) -> &CfrConfig {
        &self.config
    }

    pub fn tree(&self) -> &'a GameTree {
        self.tree
    }

    pub fn partition(&self) -> &'a InfoPartition {
        self.partition
    }

    pub fn refinement(&self) -> Option<&'a RefinementMap<'a>> {
        self.refinement
    }

    /// Completed iterations.
    pub fn iteration(&self) -> u64 {
        self.t
    }

    /// The strategy the next iteration will play, σ^{t+1}.
    pub fn current_profile(&self) -> &Profile {
        &self.sigma
    }

    pub fn regrets(&self) -> &[f64] {
        &self.main.regrets
    }

    pub fn weights(&self) -> &[f64] {
        &self.main.weights
    }

    pub fn fine_regrets(&self) -> Option<&[f64]> {
        self.fine.as_ref().map(|f| f.regrets.as_slice())
    }

    pub fn fine_weights(&self) -> Option<&[f64]> {
        self.fine.as_ref().map(|f| f.weights.as_slice())
    }

    pub fn utility_sums(&self) -> &[f64] {
        &self.utility_sums
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// σ^1, σ^2, ... when `record_profiles` is set.
    pub fn profiles(&self) -> &[Profile] {
        &self.profiles
    }

    /// Normalized average strategy in the abstract game.
    pub fn average_profile(&self) -> Profile {
        normalize(self.partition, &self.main.weights)
    }

    /// Normalized average strategy at the refinement's infosets.
    pub fn fine_average_profile(&self) -> Option<Profile> {
        let r = self.refinement?;
        Some(normalize(r.fine(), &self.fine.as_ref()?.weights))
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            iteration: self.t,
            regrets: self.main.regrets.clone(),
            weights: self.main.weights.clone(),
            fine_regrets: self.fine.as_ref().map(|f| f.regrets.clone()),
            fine_weights: self.fine.as_ref().map(|f| f.weights.clone()),
            utility_sums: self.utility_sums.clone(),
        }
    }

    /// Run until `config.iterations` iterations are complete.
    pub fn run(&mut self) {
        while self.t < self.config.iterations {
            self.iterate();
        }
    }

    /// One iteration of the configured variant.
    pub fn iterate(&mut self) {
        if self.config.record_profiles {
            self.profiles.push(self.sigma.clone());
        }
        let t = self.t + 1;
        let mut rng = match self.config.variant {
            Variant::Vanilla => None,
            Variant::ChanceSampled => {
                let mut r = ChaCha8Rng::seed_from_u64(self.config.seed);
                r.set_stream(t);
                Some(r)
            }
        };
        if self.config.alternating {
            for p in 0..self.tree.num_players() {
                self.sweep(rng.as_mut(), Some(p));
                self.refresh_sigma(Some(p));
            }
        } else {
            self.sweep(rng.as_mut(), None);
            self.refresh_sigma(None);
        }
        self.t = t;
        if self.config.schedule.contains(t, self.config.iterations) {
            self.snapshots.push(self.snapshot());
        }
    }

    fn refresh_sigma(&mut self, player: Option<usize>) {
        for (iid, set) in self.partition.infosets() {
            if player.is_some_and(|p| p != set.player) {
                continue;
            }
            let off = self.sigma.offset(iid);
            let n = set.actions.len();
            regret_matching_into(&self.main.regrets[off..off + n], &mut self.sigma.get_mut(iid)[..]);
        }
    }

    /// Traverse (all of the tree, or one sampled chance path per chance node),
    /// then update regrets and weights for `only` or every player.
    fn sweep(&mut self, mut rng: Option<&mut ChaCha8Rng>, only: Option<usize>) {
        let flat = &self.flat;
        let np = flat.players;
        let w = np + 1;
        let sigma = self.sigma.flat();
        let layout = &self.main.layout;
        let sampling = rng.is_some();

        if !sampling {
            forward(flat, layout, sigma, &mut self.reach);
            backward(flat, layout, sigma, &mut self.values);
        } else {
            self.visited.clear();
            self.reach.resize(flat.len() * w, 0.0);
            self.values.resize(flat.len() * np, 0.0);
            self.reach[..w].fill(1.0);
            let mut stack = vec![0u32];
            while let Some(h) = stack.pop() {
                self.visited.push(h);
                let hi = h as usize;
                if flat.is_terminal(hi) {
                    continue;
                }
                let r = flat.range(hi);
                if flat.is_chance(hi) {
                    let k = sample(rng.as_deref_mut().expect("sampling rng"), &flat.probs[r.clone()]);
                    self.sampled[hi] = k as u32;
                    let c = flat.children[r.start + k] as usize;
                    self.reach.copy_within(hi * w..hi * w + w, c * w);
                    self.reach[c * w + np] *= flat.probs[r.start + k];
                    stack.push(c as u32);
                } else {
                    let player = flat.player[hi] as usize;
                    let off = layout.slot[hi] as usize;
                    for (k, e) in r.clone().enumerate() {
                        let c = flat.children[e] as usize;
                        self.reach.copy_within(hi * w..hi * w + w, c * w);
                        self.reach[c * w + player] *= sigma[off + k];
                    }
                    stack.extend(flat.children[r].iter().rev());
                }
            }
            for &h in self.visited.iter().rev() {
                let hi = h as usize;
                let r = flat.range(hi);
                if flat.is_terminal(hi) {
                    self.values[hi * np..hi * np + np].copy_from_slice(&flat.utility[hi * np..hi * np + np]);
                } else if flat.is_chance(hi) {
                    let c = flat.children[r.start + self.sampled[hi] as usize] as usize;
                    self.values.copy_within(c * np..c * np + np, hi * np);
                } else {
                    let off = layout.slot[hi] as usize;
                    self.values[hi * np..hi * np + np].fill(0.0);
                    for (k, e) in r.enumerate() {
                        let c = flat.children[e] as usize;
                        let p = sigma[off + k];
                        for j in 0..np {
                            self.values[hi * np + j] += p * self.values[c * np + j];
                        }
                    }
                }
            }
            self.visited.sort_unstable();
        }

        for j in 0..np {
            if only.is_none_or(|p| p == j) {
                self.utility_sums[j] += self.values[j];
            }
        }

        let order: &[u32] = if sampling { &self.visited } else { &flat.decisions };
        for &h in order {
            let hi = h as usize;
            if flat.is_terminal(hi) || flat.is_chance(hi) {
                continue;
            }
            let player = flat.player[hi] as usize;
            if only.is_some_and(|p| p != player) {
                continue;
            }
            let row = &self.reach[hi * w..hi * w + w];
            // Sampled traversals leave chance out of the counterfactual reach and
            // divide average weights by the sampling probability.
            let cf: f64 = (0..w)
                .filter(|&j| j != player && !(sampling && j == np))
                .map(|j| row[j])
                .product();
            let own = if sampling { row[player] / row[np] } else { row[player] };
            let v = self.values[hi * np + player];
            let off = self.main.layout.slot[hi] as usize;
            let inv = self.main.layout.inv_size[hi];
            let mut fine = self
                .fine
                .as_mut()
                .map(|f| (f.layout.slot[hi] as usize, f.layout.inv_size[hi], f));
            for (k, e) in flat.range(hi).enumerate() {
                let c = flat.children[e] as usize;
                let r = cf * (self.values[c * np + player] - v);
                let s = sigma[off + k];
                self.main.regrets[off + k] += r;
                self.main.weights[off + k] += own * s * inv;
                if let Some((fslot, finv, f)) = fine.as_mut() {
                    f.regrets[*fslot + k] += r;
                    f.weights[*fslot + k] += own * s * *finv;
                }
            }
        }
    }
}

fn sample(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if x < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Normalize cumulative weights per infoset; zero-weight infosets are uniform.
pub fn normalize(partition: &InfoPartition, weights: &[f64]) -> Profile {
    let mut p = Profile::uniform(partition);
    for (iid, _) in partition.infosets() {
        let off = p.offset(iid);
        let out = p.get_mut(iid);
        let w = &weights[off..off + out.len()];
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            for (o, x) in out.iter_mut().zip(w) {
                *o = x / total;
            }
        }
    }
    p
}

/// Run CFR to completion.
pub fn run<'a>(
    tree: &'a GameTree,
    partition: &'a InfoPartition,
    refinement: Option<&'a RefinementMap<'a>>,
    config: CfrConfig,
) -> Result<Solver<'a>> {
    let mut s = Solver::new(tree, partition, refinement, config)?;
    s.run();
    Ok(s)
}

/// Infosets violating max_a R^T(I,a)/T ≤ Δ_i √|A(I)| / √T, as
/// (infoset, left side, right side).
pub fn immediate_regret_violations(
    tree: &GameTree,
    partition: &InfoPartition,
    snapshot: &Snapshot,
) -> Vec<(InfosetId, f64, f64)> {
    let t = snapshot.iteration as f64;
    let shape = Profile::uniform(partition);
    partition
        .infosets()
        .filter_map(|(iid, set)| {
            let off = shape.offset(iid);
            let n = set.actions.len();
            let lhs = snapshot.regrets[off..off + n]
                .iter()
                .fold(f64::NEG_INFINITY, |m, &r| m.max(r))
                / t;
            let rhs = tree.utility_range(set.player) * (n as f64).sqrt() / t.sqrt();
            (lhs > rhs).then_some((iid, lhs, rhs))
        })
        .collect()
}
