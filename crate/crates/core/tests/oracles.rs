//! Verifier and evaluator checked against values worked out by hand on the
//! small games in `common`.

mod common;

use irrecall::abstraction::make_refinement;
use irrecall::cfr::{normalize, run, CfrConfig, Schedule};
use irrecall::evaluator::{average_regret, best_response_value, direct_average_regret, exploitability};
use irrecall::game::{expected_utility, Profile};
use irrecall::verifier::{bound_constants, classify, Check, Verdict, Verifier};

const EPS: f64 = 1e-12;

#[test]
fn identity_abstractions_are_well_formed() {
    for h in common::hand_built() {
        let map = make_refinement(&h.tree, &h.partition, &h.partition).unwrap();
        let report = Verifier::new(&map).unwrap().run(Check::Well).unwrap();
        assert_eq!(report.verdict, Verdict::WellFormed, "{}", h.name);
        assert!(report.pairs.is_empty(), "{}", h.name);
    }
}

/// Heavy and light coin merged for player 1: payoffs scale by 3, chance by
/// 1/2, and the guesser's view is identical.
#[test]
fn merged_coin_is_well_formed_with_hand_constants() {
    let h = common::coin_pennies();
    let coarse = h.coarsen("abstract", |k| if k == "guess" { k.into() } else { "coin".into() });
    assert_eq!(coarse.len(), 2);
    let map = make_refinement(&h.tree, &coarse, &h.partition).unwrap();
    let report = classify(&map).unwrap();
    assert_eq!(report.verdict, Verdict::WellFormed);
    assert!(!report.pairs.is_empty());
    for p in &report.pairs {
        assert!(p.passed());
        let (k, l) = (p.k.unwrap(), p.l.unwrap());
        let heavy_first = (k - 3.0).abs() < EPS && (l - 0.5).abs() < EPS;
        let light_first = (k - 1.0 / 3.0).abs() < EPS && (l - 2.0).abs() < EPS;
        assert!(heavy_first || light_first, "k {k} l {l}");
        assert!((p.kl().unwrap() - if heavy_first { 1.5 } else { 2.0 / 3.0 }).abs() < EPS);
    }
    let bounds = bound_constants(&report, &map).unwrap();
    // Player 1: range 1.5 - (-3), K = max k·ℓ = 1.5, two actions.
    assert!((bounds[0].utility_range - 4.5).abs() < EPS);
    assert!((bounds[0].k_sum - 1.5).abs() < EPS);
    assert_eq!(bounds[0].max_actions, 2);
    assert_eq!(bounds[0].floor, 0.0);
}

#[test]
fn merged_coin_regret_stays_under_bound() {
    let h = common::coin_pennies();
    let coarse = h.coarsen("abstract", |k| if k == "guess" { k.into() } else { "coin".into() });
    let map = make_refinement(&h.tree, &coarse, &h.partition).unwrap();
    let report = classify(&map).unwrap();
    let bounds = bound_constants(&report, &map).unwrap();
    let config = CfrConfig {
        record_profiles: true,
        schedule: Schedule::PowersOfTwo,
        ..CfrConfig::vanilla(256)
    };
    let s = run(&h.tree, &coarse, Some(&map), config).unwrap();
    for t in [1usize, 16, 256] {
        for b in &bounds {
            let r = direct_average_regret(&h.tree, &h.partition, &coarse, &s.profiles()[..t], b.player).unwrap();
            assert!(r <= b.regret_bound(t as u64), "t {t} player {} regret {r}", b.player);
        }
    }
}

/// Jack and queen share player 1's opening infoset: the queen can win a
/// showdown that the jack always loses, so no positive k scales one onto the
/// other.
#[test]
fn kuhn_jack_queen_merge_is_not_well_formed() {
    let h = common::kuhn();
    let coarse = h.coarsen("abstract", |k| match k {
        "J" | "Q" => "JQ".into(),
        _ => k.into(),
    });
    let map = make_refinement(&h.tree, &coarse, &h.partition).unwrap();
    for check in [Check::Well, Check::Skew] {
        let report = Verifier::new(&map).unwrap().run(check).unwrap();
        assert!(!report.holds(), "{check:?}");
        assert!(report.first_failure().is_some());
    }
}

/// Forgetting the opponent's move at the last decision breaks condition (i):
/// after a, x pays (2, -1) and y pays (0.5, 0).
#[test]
fn three_way_forgetting_opponent_is_not_well_formed() {
    let h = common::three_way();
    let coarse = h.coarsen("abstract", |k| match k {
        "ax" | "ay" => "a?".into(),
        _ => k.into(),
    });
    let map = make_refinement(&h.tree, &coarse, &h.partition).unwrap();
    let report = Verifier::new(&map).unwrap().run(Check::Well).unwrap();
    assert_eq!(report.verdict, Verdict::NotWellFormed);
}

fn kuhn_equilibrium(h: &common::Hand) -> Profile {
    // Player 1 never bluffs or value-bets (alpha = 0); player 2 bluffs a jack
    // a third of the time and calls with a queen a third of the time;
    // kings always bet.
    Profile::from_fn(&h.partition, |iid, out| {
        let key = h.partition.infoset(iid).key.as_str();
        let first = match key {
            "J" | "Q" | "K" => 1.0,
            "Jcb" => 1.0,
            "Qcb" => 2.0 / 3.0,
            "Kcb" => 0.0,
            "Jc" => 2.0 / 3.0,
            "Qc" => 1.0,
            "Kc" => 0.0,
            "Jb" => 1.0,
            "Qb" => 2.0 / 3.0,
            "Kb" => 0.0,
            other => panic!("unexpected key {other}"),
        };
        out[0] = first;
        out[1] = 1.0 - first;
    })
}

#[test]
fn kuhn_equilibrium_value_and_zero_exploitability() {
    let h = common::kuhn();
    let nash = kuhn_equilibrium(&h);
    let v = expected_utility(&h.tree, &h.partition, &nash, 0);
    assert!((v + 1.0 / 18.0).abs() < EPS, "value {v}");
    assert!(
        exploitability(&h.tree, &h.partition, &h.partition, &nash)
            .unwrap()
            .abs()
            < EPS
    );
    assert!((best_response_value(&h.tree, &h.partition, &nash, 0).unwrap().value - v).abs() < EPS);
    assert!((best_response_value(&h.tree, &h.partition, &nash, 1).unwrap().value + v).abs() < EPS);
}

/// Against a uniform guesser every player-1 strategy earns the same, so the
/// best response value is the uniform value: 1/3·3·(-1/4) + 2/3·1·(-1/4).
#[test]
fn coin_best_response_against_uniform_guesser() {
    let h = common::coin_pennies();
    let uni = Profile::uniform(&h.partition);
    let br = best_response_value(&h.tree, &h.partition, &uni, 0).unwrap();
    assert!((br.value - (-1.0 / 4.0 - 1.0 / 6.0)).abs() < EPS, "{}", br.value);
}

#[test]
fn kuhn_cfr_regret_identity_and_convergence() {
    let h = common::kuhn();
    let s = run(&h.tree, &h.partition, None, CfrConfig::vanilla(10_000)).unwrap();
    let avg = normalize(&h.partition, s.weights());
    let sum: f64 = (0..2)
        .map(|i| {
            average_regret(
                &h.tree,
                &h.partition,
                &h.partition,
                &avg,
                s.utility_sums()[i],
                s.iteration(),
                i,
            )
            .unwrap()
        })
        .sum();
    let expl = exploitability(&h.tree, &h.partition, &h.partition, &avg).unwrap();
    assert!((sum - expl).abs() < 1e-9);
    assert!(expl < 0.01, "{expl}");
    assert!((expected_utility(&h.tree, &h.partition, &avg, 0) + 1.0 / 18.0).abs() < 0.01);
}
