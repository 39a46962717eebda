mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irrecall::abstraction::make_refinement;
use irrecall::cfr::{normalize, regret_matching, run, CfrConfig};
use irrecall::evaluator::{average_regret, best_response_value, exploitability};
use irrecall::game::{
    content_hash, expected_utility, parse_tree, write_tree, GameTree, InfoPartition, Prob, Profile, TreeBuilder,
};
use irrecall::games::{build_drp, DrpConfig};
use irrecall::verifier::{Check, Verifier};

fn random_profile(part: &InfoPartition, seed: u64) -> Profile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Profile::from_fn(part, |_, out| {
        for o in out.iter_mut() {
            // Some pure and near-pure mixes.
            *o = if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() };
        }
        let s: f64 = out.iter().sum();
        if s == 0.0 {
            out[0] = 1.0;
        } else {
            out.iter_mut().for_each(|o| *o /= s);
        }
    })
}

/// `base` with player `i`'s infosets taken from `own`.
fn splice(part: &InfoPartition, base: &Profile, own: &Profile, i: usize) -> Profile {
    Profile::from_fn(part, |iid, out| {
        let src = if part.infoset(iid).player == i { own } else { base };
        out.copy_from_slice(src.get(iid));
    })
}

fn random_tree(seed: u64) -> GameTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = TreeBuilder::new(2).zero_sum(true);
    fn grow(b: &mut TreeBuilder, rng: &mut ChaCha8Rng, parent: Option<irrecall::game::NodeId>, depth: u32) {
        if depth == 0 || rng.random_bool(0.25) {
            let u = (rng.random_range(-40..=40) as f64) / 8.0;
            b.terminal(parent, vec![u, -u]);
            return;
        }
        let n = rng.random_range(2..=3usize);
        let labels = ["a", "b", "c"];
        let node = if rng.random_bool(0.3) {
            let den = rng.random_range(n as u64..=6);
            let mut outcomes: Vec<(&str, Prob)> = (0..n - 1).map(|k| (labels[k], Prob::new(1, den))).collect();
            outcomes.push((labels[n - 1], Prob::new(den - (n as u64 - 1), den)));
            b.chance(parent, &outcomes)
        } else {
            b.decision(parent, rng.random_range(0..2), &labels[..n])
        };
        for _ in 0..n {
            grow(b, rng, Some(node), depth - 1);
        }
    }
    grow(&mut b, &mut rng, None, 4);
    b.finish()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn regret_matching_is_a_distribution(r in prop::collection::vec(-10.0f64..10.0, 1..8)) {
        let s = regret_matching(&r).unwrap();
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let pos: f64 = r.iter().map(|x| x.max(0.0)).sum();
        for (p, x) in s.iter().zip(&r) {
            prop_assert!(*p >= 0.0);
            if pos > 0.0 {
                prop_assert!((p - x.max(0.0) / pos).abs() < 1e-12);
            } else {
                prop_assert!((p - 1.0 / r.len() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn best_response_dominates(game in 0usize..3, seed in any::<u64>(), other in any::<u64>(), i in 0usize..2) {
        let h = common::hand_built().swap_remove(game);
        let sigma = random_profile(&h.partition, seed);
        let br = best_response_value(&h.tree, &h.partition, &sigma, i).unwrap();
        let dev = splice(&h.partition, &sigma, &random_profile(&h.partition, other), i);
        prop_assert!(br.value >= expected_utility(&h.tree, &h.partition, &dev, i) - 1e-12);
        let played = splice(&h.partition, &sigma, &br.strategy, i);
        prop_assert!((br.value - expected_utility(&h.tree, &h.partition, &played, i)).abs() < 1e-12);
    }

    #[test]
    fn exploitability_is_sum_of_best_responses(game in 0usize..3, seed in any::<u64>()) {
        let h = common::hand_built().swap_remove(game);
        let sigma = random_profile(&h.partition, seed);
        let e = exploitability(&h.tree, &h.partition, &h.partition, &sigma).unwrap();
        let sum: f64 = (0..2).map(|i| best_response_value(&h.tree, &h.partition, &sigma, i).unwrap().value).sum();
        prop_assert!(e >= -1e-12);
        prop_assert!((e - sum).abs() < 1e-12);
    }

    #[test]
    fn regret_sum_equals_exploitability(game in 0usize..3, t in 1u64..80) {
        let h = common::hand_built().swap_remove(game);
        let s = run(&h.tree, &h.partition, None, CfrConfig::vanilla(t)).unwrap();
        let avg = normalize(&h.partition, s.weights());
        let sum: f64 = (0..2)
            .map(|i| average_regret(&h.tree, &h.partition, &h.partition, &avg, s.utility_sums()[i], t, i).unwrap())
            .sum();
        let e = exploitability(&h.tree, &h.partition, &h.partition, &avg).unwrap();
        prop_assert!((sum - e).abs() < 1e-9, "sum {sum} exploitability {e}");
    }

    #[test]
    fn tree_text_round_trips(seed in any::<u64>()) {
        let tree = random_tree(seed);
        let back = parse_tree(&write_tree(&tree)).unwrap();
        prop_assert_eq!(content_hash(&tree), content_hash(&back));
        prop_assert_eq!(write_tree(&tree), write_tree(&back));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pair_checks_are_symmetric(delta in prop::sample::select(vec![0.0, 0.5]), pick in any::<prop::sample::Index>(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let g = build_drp(&DrpConfig::default().with_sides(2).with_skew(delta)).unwrap();
        let map = make_refinement(&g.tree, &g.abstraction, &g.refinement).unwrap();
        let groups: Vec<_> = map.merged().collect();
        let (cid, group) = groups[pick.index(groups.len())];
        let (x, y) = (group[a.index(group.len())], group[b.index(group.len())]);
        prop_assume!(x != y);
        let v = Verifier::new(&map).unwrap();
        for check in [Check::Well, Check::Skew] {
            let xy = v.check_pair(check, cid, x, y).unwrap();
            let yx = v.check_pair(check, cid, y, x).unwrap();
            prop_assert_eq!(xy.passed(), yx.passed());
            if xy.passed() {
                prop_assert!((xy.k.unwrap() * yx.k.unwrap() - 1.0).abs() < 1e-12);
                prop_assert!((xy.l.unwrap() * yx.l.unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }
}
