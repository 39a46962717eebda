//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.
//!
//! Every self-play run is computed once and cached, so criterion 10 can check
//! all of them whatever order the tests run in.

mod common;

use std::collections::HashMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use irrecall::abstraction::{make_refinement, RefinementMap};
use irrecall::cfr::{normalize, run, CfrConfig, Schedule, Solver, Variant};
use irrecall::cli::savings;
use irrecall::evaluator::{
    average_regret, best_response_value, direct_average_regret, exhaustive_best_response, exploitability, RegretCurve,
    ENUMERATION_CAP,
};
use irrecall::game::{count_infoset_actions, expected_utility, GameTree, InfoPartition, InfosetId, Profile};
use irrecall::games::{
    build_bluff, build_counterexample, build_drp, build_pttt, BluffConfig, BuiltGame, CounterexampleConfig, DrpConfig,
    MemoryModel, PtttConfig,
};
use irrecall::verifier::{
    bound_constants, check_nearly_well_formed, check_skew_well_formed, check_well_formed, classify, BoundConstants,
    Condition, Outcome, Verdict,
};

fn report(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

/// Σ_i R̄_i and the exploitability of the average strategy at every checkpoint.
#[derive(Clone, Debug)]
struct ZeroSum {
    label: String,
    rows: Vec<(u64, f64, f64)>,
}

fn zero_sum(label: &str, tree: &GameTree, full: &InfoPartition, solver: &Solver, curve: &RegretCurve) -> ZeroSum {
    let part = solver.refinement().map_or(solver.partition(), RefinementMap::fine);
    let rows = solver
        .snapshots()
        .iter()
        .zip(&curve.points)
        .map(|(snap, pt)| {
            let w = snap.fine_weights.as_ref().unwrap_or(&snap.weights);
            let avg = normalize(part, w);
            (pt.iteration, pt.sum, exploitability(tree, full, part, &avg).unwrap())
        })
        .collect();
    ZeroSum {
        label: label.to_string(),
        rows,
    }
}

fn pow2_from(first: u32, last: u32) -> Schedule {
    Schedule::At((first..=last).map(|k| 1u64 << k).collect())
}

/// Offsets of every (infoset, action) slot, keyed by (infoset, label).
fn slots(g: &BuiltGame, part: &InfoPartition) -> HashMap<(InfosetId, String), usize> {
    let shape = Profile::uniform(part);
    let mut out = HashMap::new();
    for (iid, set) in part.infosets() {
        for (k, &a) in set.actions.iter().enumerate() {
            out.insert((iid, g.tree.label(a).to_string()), shape.offset(iid) + k);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Cached runs

struct CounterexampleRun {
    xi: f64,
    sigma3_ok: bool,
    stationary: bool,
    u_dev: f64,
    /// (T, R̄_1) for T in 10..=1000.
    regret: Vec<(u64, f64)>,
    elapsed: Duration,
    zero_sum: ZeroSum,
}

fn prob(g: &BuiltGame, p: &Profile, key: &str, action: &str) -> f64 {
    let part = &g.abstraction;
    let iid = (0..2).find_map(|pl| part.find_key(pl, key)).unwrap();
    let set = part.infoset(iid);
    let k = set.actions.iter().position(|&a| g.tree.label(a) == action).unwrap();
    p.get(iid)[k]
}

fn counterexample_run() -> &'static CounterexampleRun {
    static RUN: OnceLock<CounterexampleRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let xi = 0.5;
        let g = build_counterexample(&CounterexampleConfig { xi }).unwrap();
        let map = make_refinement(&g.tree, &g.abstraction, &g.refinement).unwrap();
        let config = CfrConfig {
            record_profiles: true,
            schedule: Schedule::At((10..=1000).collect()),
            ..CfrConfig::vanilla(1000)
        };
        let s = run(&g.tree, &g.abstraction, Some(&map), config).unwrap();
        let profiles = s.profiles();

        // profiles[t - 1] is σ^t.
        let sigma3 = &profiles[2];
        let expected = [
            ("I1", "p", 1.0),
            ("I2", "p", 1.0),
            ("ac", "p", 1.0),
            ("bc", "p", 0.0),
            ("dc", "p", 0.0),
            ("ec", "p", 1.0),
            ("I3", "l", 0.5),
        ];
        let sigma3_ok = expected
            .iter()
            .all(|&(k, a, v)| (prob(&g, sigma3, k, a) - v).abs() <= 1e-12);
        let stationary = profiles[2..].iter().all(|p| p.max_abs_diff(sigma3) <= 1e-12);

        // σ1′ = {(I1,p)=1, (I2,p)=0, (I3,l)=0} against σ2³.
        let mut deviation = sigma3.clone();
        for (key, first) in [("I1", 1.0), ("I2", 0.0), ("I3", 0.0)] {
            let iid = g.abstraction.find_key(0, key).unwrap();
            deviation.get_mut(iid).copy_from_slice(&[first, 1.0 - first]);
        }
        let u_dev = expected_utility(&g.tree, &g.abstraction, &deviation, 0);

        let curve = RegretCurve::from_solver(&s, &g.refinement, None).unwrap();
        let regret = curve.points.iter().map(|p| (p.iteration, p.regret[0])).collect();
        let elapsed = start.elapsed();
        CounterexampleRun {
            xi,
            sigma3_ok,
            stationary,
            u_dev,
            regret,
            elapsed,
            zero_sum: zero_sum("counterexample", &g.tree, &g.refinement, &s, &curve),
        }
    })
}

struct AdditiveRun {
    coarse_slots: usize,
    worst_additive: f64,
    unit_pairs: usize,
    checkpoints: usize,
    worst_proportional: f64,
    elapsed: Duration,
    zero_sum: ZeroSum,
}

fn additive_run() -> &'static AdditiveRun {
    static RUN: OnceLock<AdditiveRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let g = build_drp(&DrpConfig::default()).unwrap();
        let map = make_refinement(&g.tree, &g.abstraction, &g.refinement).unwrap();
        let wf = check_well_formed(&map).unwrap();
        assert!(wf.holds());
        let config = CfrConfig {
            schedule: Schedule::PowersOfTwo,
            ..CfrConfig::vanilla(1000)
        };
        let s = run(&g.tree, &g.abstraction, Some(&map), config).unwrap();
        let coarse = slots(&g, &g.abstraction);
        let fine = slots(&g, &g.refinement);

        // R(I,a) against Σ over the refinement infosets inside I.
        let (r, fr) = (s.regrets(), s.fine_regrets().unwrap());
        let mut worst_additive = 0.0f64;
        for ((iid, label), &slot) in &coarse {
            let total: f64 = map.group(*iid).iter().map(|f| fr[fine[&(*f, label.clone())]]).sum();
            worst_additive = worst_additive.max((r[slot] - total).abs() / (1.0 + r[slot].abs()));
        }
        let elapsed = start.elapsed();

        // Positive regrets of merged pairs with k = l = 1, at every checkpoint.
        let unit: Vec<_> = wf
            .pairs
            .iter()
            .filter(|p| p.k == Some(1.0) && p.l == Some(1.0))
            .collect();
        let mut worst_proportional = 0.0f64;
        for snap in s.snapshots() {
            let fr = snap.fine_regrets.as_ref().unwrap();
            for p in &unit {
                for &a in &g.refinement.infoset(p.fine_a).actions {
                    let label = g.tree.label(a).to_string();
                    let x = fr[fine[&(p.fine_a, label.clone())]].max(0.0);
                    let y = fr[fine[&(p.fine_b, label)]].max(0.0);
                    let scale = x.max(y);
                    if scale > 0.0 {
                        worst_proportional = worst_proportional.max((x - y).abs() / scale);
                    }
                }
            }
        }
        let curve = RegretCurve::from_solver(&s, &g.refinement, None).unwrap();
        AdditiveRun {
            coarse_slots: coarse.len(),
            worst_additive,
            unit_pairs: unit.len(),
            checkpoints: s.snapshots().len(),
            worst_proportional,
            elapsed,
            zero_sum: zero_sum("drp-ir T=1000", &g.tree, &g.refinement, &s, &curve),
        }
    })
}

struct LongRun {
    curve: RegretCurve,
    bounds: Vec<BoundConstants>,
    elapsed: Duration,
    zero_sum: ZeroSum,
}

fn drp_ir_run(variant: Variant) -> LongRun {
    let start = Instant::now();
    let g = build_drp(&DrpConfig::default()).unwrap();
    let map = make_refinement(&g.tree, &g.abstraction, &g.refinement).unwrap();
    let wf = check_well_formed(&map).unwrap();
    let bounds = bound_constants(&wf, &map).unwrap();
    let config = CfrConfig {
        variant,
        schedule: pow2_from(4, 16),
        ..CfrConfig::vanilla(1 << 16)
    };
    let s = run(&g.tree, &g.abstraction, Some(&map), config).unwrap();
    let curve = RegretCurve::from_solver(&s, &g.refinement, Some(&bounds)).unwrap();
    let elapsed = start.elapsed();
    let zero_sum = zero_sum(
        &format!("drp-ir T=2^16 {variant:?}"),
        &g.tree,
        &g.refinement,
        &s,
        &curve,
    );
    LongRun {
        curve,
        bounds,
        elapsed,
        zero_sum,
    }
}

/// Vanilla CFR, T = 2^16.
fn vanilla_run() -> &'static LongRun {
    static RUN: OnceLock<LongRun> = OnceLock::new();
    RUN.get_or_init(|| drp_ir_run(Variant::Vanilla))
}

/// Chance-sampled CFR, T = 2^16, seed 0.
fn sampled_run() -> &'static LongRun {
    static RUN: OnceLock<LongRun> = OnceLock::new();
    RUN.get_or_init(|| drp_ir_run(Variant::ChanceSampled))
}

struct SkewRun {
    delta: f64,
    holds: bool,
    under: bool,
    final_sum: f64,
    final_bound: f64,
    floor: f64,
    zero_sum: ZeroSum,
}

fn skew_runs() -> &'static [SkewRun] {
    static RUNS: OnceLock<Vec<SkewRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        [0.1, 0.5, 1.0]
            .into_iter()
            .map(|delta| {
                let g = build_drp(&DrpConfig::default().with_skew(delta)).unwrap();
                let map = make_refinement(&g.tree, &g.abstraction, &g.refinement).unwrap();
                let rep = check_skew_well_formed(&map).unwrap();
                let bounds = bound_constants(&rep, &map).unwrap();
                let config = CfrConfig {
                    schedule: pow2_from(4, 14),
                    ..CfrConfig::vanilla(1 << 14)
                };
                let s = run(&g.tree, &g.abstraction, Some(&map), config).unwrap();
                let curve = RegretCurve::from_solver(&s, &g.refinement, Some(&bounds)).unwrap();
                let last = curve.points.last().unwrap();
                SkewRun {
                    delta,
                    holds: rep.holds(),
                    under: curve.points.iter().all(|p| p.sum <= p.bound.unwrap()),
                    final_sum: last.sum,
                    final_bound: last.bound.unwrap(),
                    floor: bounds.iter().map(|b| b.floor).sum(),
                    zero_sum: zero_sum(
                        &format!("skew-drp-ir delta={delta}"),
                        &g.tree,
                        &g.refinement,
                        &s,
                        &curve,
                    ),
                }
            })
            .collect()
    })
}

struct NearlyRun {
    mapped: usize,
    worst_gap: f64,
    bound_ok: bool,
    checkpoints: usize,
    zero_sum: ZeroSum,
}

fn nearly_run() -> &'static NearlyRun {
    static RUN: OnceLock<NearlyRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let g = build_drp(&DrpConfig::three_round().with_sides(2)).unwrap();
        let map = make_refinement(&g.tree, &g.abstraction, &g.refinement).unwrap();
        let rep = check_nearly_well_formed(&map).unwrap();
        assert!(rep.holds());
        let bounds = bound_constants(&rep, &map).unwrap();
        let config = CfrConfig {
            record_profiles: true,
            schedule: Schedule::PowersOfTwo,
            ..CfrConfig::vanilla(500)
        };
        let s = run(&g.tree, &g.abstraction, Some(&map), config).unwrap();

        // ψ pairs abstract infosets; ω keeps action positions.
        let mut mapped = 0;
        let mut worst_gap = 0.0f64;
        for p in rep.pairs.iter().filter(|p| matches!(p.outcome, Outcome::Pass)) {
            for &(cj, cpj) in &p.psi {
                mapped += 1;
                for sigma in s.profiles() {
                    for (x, y) in sigma.get(cj).iter().zip(sigma.get(cpj)) {
                        worst_gap = worst_gap.max((x - y).abs());
                    }
                }
            }
        }
        let curve = RegretCurve::from_solver(&s, &g.refinement, Some(&bounds)).unwrap();
        let bound_ok = curve.points.iter().all(|pt| {
            bounds
                .iter()
                .enumerate()
                .all(|(i, b)| pt.regret[i] <= b.regret_bound(pt.iteration))
        });
        NearlyRun {
            mapped,
            worst_gap,
            bound_ok,
            checkpoints: curve.points.len(),
            zero_sum: zero_sum("drp-ir-3", &g.tree, &g.refinement, &s, &curve),
        }
    })
}

struct OracleRun {
    name: &'static str,
    br_exact: bool,
    regret_gap: f64,
    zero_sum: ZeroSum,
}

fn oracle_runs() -> &'static [OracleRun] {
    static RUNS: OnceLock<Vec<OracleRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        common::hand_built()
            .into_iter()
            .map(|h| {
                let (tree, part) = (&h.tree, &h.partition);
                let config = CfrConfig {
                    record_profiles: true,
                    schedule: Schedule::PowersOfTwo,
                    ..CfrConfig::vanilla(64)
                };
                let s = run(tree, part, None, config).unwrap();
                let mut br_exact = true;
                let mut regret_gap = 0.0f64;
                for i in 0..2 {
                    for opp in [Profile::uniform(part), s.average_profile()] {
                        let fast = best_response_value(tree, part, &opp, i).unwrap().value;
                        let slow = exhaustive_best_response(tree, part, part, &opp, i, ENUMERATION_CAP)
                            .unwrap()
                            .value;
                        br_exact &= fast == slow;
                    }
                    for snap in s.snapshots() {
                        let avg = normalize(part, &snap.weights);
                        let fast =
                            average_regret(tree, part, part, &avg, snap.utility_sums[i], snap.iteration, i).unwrap();
                        let t = snap.iteration as usize;
                        let direct = direct_average_regret(tree, part, part, &s.profiles()[..t], i).unwrap();
                        regret_gap = regret_gap.max((fast - direct).abs());
                    }
                }
                let curve = RegretCurve::from_solver(&s, part, None).unwrap();
                OracleRun {
                    name: h.name,
                    br_exact,
                    regret_gap,
                    zero_sum: zero_sum(h.name, tree, part, &s, &curve),
                }
            })
            .collect()
    })
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_01_drp_action_counts() {
    let start = Instant::now();
    let g = build_drp(&DrpConfig::default()).unwrap();
    let (full, abs) = (
        count_infoset_actions(&g.refinement),
        count_infoset_actions(&g.abstraction),
    );
    let s = format!("{:.2}%", savings(&g.refinement, &g.abstraction));
    let elapsed = start.elapsed();
    let pass = full == 2610 && abs == 860 && s == "67.05%" && elapsed < Duration::from_secs(1);
    report(
        1,
        pass,
        &format!("|A| drp {full}, drp-ir {abs}, savings {s}, {elapsed:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_counterexample_trace() {
    let c = counterexample_run();
    let u_ok = c.u_dev == 0.125 && (c.u_dev - (1.0 - c.xi) / 4.0).abs() <= 1e-12;
    let (lo, hi) = c
        .regret
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, x)| {
            (a.min(x), b.max(x))
        });
    let constant = hi - lo < 1e-9;
    // T·R̄_T grows by the same amount every iteration once σ^t = σ³.
    let steps: Vec<f64> = c
        .regret
        .windows(2)
        .map(|w| w[1].1 * w[1].0 as f64 - w[0].1 * w[0].0 as f64)
        .collect();
    let step_spread = steps.iter().fold(0.0f64, |m, x| m.max((x - steps[0]).abs()));
    let fast = c.elapsed < Duration::from_secs(1);
    let pass = c.sigma3_ok && c.stationary && u_ok && constant && fast;
    report(
        2,
        pass,
        &format!(
            "sigma3 {}, sigma^t = sigma3 for 3..=1000 {}, u1(dev, sigma2^3) = {}, \
             avg regret p1 over [10,1000] spans [{lo:.9}, {hi:.9}] (spread {:.2e}, limit 1e-9), \
             regret added per iteration {:.12} (spread {step_spread:.1e}), {:?}",
            c.sigma3_ok,
            c.stationary,
            c.u_dev,
            hi - lo,
            steps[0],
            c.elapsed
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_additive_regret() {
    let a = additive_run();
    let pass = a.worst_additive <= 1e-9 && a.elapsed < Duration::from_secs(60);
    report(
        3,
        pass,
        &format!(
            "{} coarse slots, worst |R - sum R_fine| / (1 + |R|) = {:.2e}, {:?}",
            a.coarse_slots, a.worst_additive, a.elapsed
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_proportional_regret() {
    let a = additive_run();
    let pass = a.unit_pairs > 0 && a.worst_proportional <= 1e-9;
    report(
        4,
        pass,
        &format!(
            "{} pairs with k = l = 1 over {} checkpoints, worst relative gap {:.2e}",
            a.unit_pairs, a.checkpoints, a.worst_proportional
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_regret_bound_on_drp_ir() {
    let run = vanilla_run();
    let mut ok = true;
    let mut tightest = f64::INFINITY;
    for p in &run.curve.points {
        for (i, b) in run.bounds.iter().enumerate() {
            let bound = b.regret_bound(p.iteration);
            ok &= p.regret[i] <= bound;
            tightest = tightest.min(bound / p.regret[i]);
        }
    }
    let n = run.curve.points.len();
    let pass = ok && n == 13 && run.elapsed < Duration::from_secs(600);
    report(
        5,
        pass,
        &format!(
            "{n} checkpoints 2^4..2^16, smallest bound/regret ratio {tightest:.0}, {:?}",
            run.elapsed
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_skew_regret() {
    let runs = skew_runs();
    let increasing = runs.windows(2).all(|w| w[0].final_sum < w[1].final_sum);
    let pass = increasing && runs.iter().all(|r| r.holds && r.under);
    let lines: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "delta {}: final {:.6} <= bound {:.1} (floor {:.1}) at all checkpoints {}",
                r.delta, r.final_sum, r.final_bound, r.floor, r.under
            )
        })
        .collect();
    report(
        6,
        pass,
        &format!("{}; strictly increasing {increasing}", lines.join("; ")),
    );
    assert!(pass);
}

#[test]
fn criterion_07_verdicts() {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut expect = |name: &str, g: &BuiltGame, want: Verdict, condition: Option<Condition>| {
        let map = make_refinement(&g.tree, &g.abstraction, &g.refinement).unwrap();
        let rep = classify(&map).unwrap();
        let mut good = rep.verdict == want;
        if let Some(c) = condition {
            let skew = check_skew_well_formed(&map).unwrap();
            let witness = rep.first_failure().map(|(_, w)| w.clone());
            good &= !skew.holds() && witness.is_some_and(|w| w.condition == c && w.terminal.is_some());
        }
        ok &= good;
        lines.push(format!(
            "{name} {}{}",
            rep.verdict,
            if good { "" } else { " (unexpected)" }
        ));
    };
    expect(
        "drp-ir",
        &build_drp(&DrpConfig::default()).unwrap(),
        Verdict::WellFormed,
        None,
    );
    expect(
        "pttt-fosf",
        &build_pttt(&PtttConfig::desk(MemoryModel::Fosf)).unwrap(),
        Verdict::WellFormed,
        None,
    );
    for m in [MemoryModel::Foi, MemoryModel::Fos, MemoryModel::Foe] {
        let g = build_pttt(&PtttConfig::desk(m)).unwrap();
        expect(
            &format!("pttt-{m}"),
            &g,
            Verdict::NotWellFormed,
            Some(Condition::Opponent),
        );
    }
    for r in [1, 2] {
        let g = build_bluff(&BluffConfig {
            memory: r,
            ..BluffConfig::default()
        })
        .unwrap();
        expect(
            &format!("bluff(1,1) r={r}"),
            &g,
            Verdict::NotWellFormed,
            Some(Condition::Opponent),
        );
    }
    let drp3 = build_drp(&DrpConfig::three_round().with_sides(2)).unwrap();
    expect("drp-ir-3 (2 sides)", &drp3, Verdict::NearlyWellFormed, None);
    report(7, ok, &lines.join(", "));
    assert!(ok);
}

#[test]
fn criterion_08_nearly_well_formed_mirroring() {
    let n = nearly_run();
    let pass = n.mapped > 0 && n.worst_gap <= 1e-9 && n.bound_ok;
    report(
        8,
        pass,
        &format!(
            "{} mirrored infoset pairs over 500 iterations, worst gap {:.1e}; bound at {} checkpoints {}",
            n.mapped, n.worst_gap, n.checkpoints, n.bound_ok
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_oracle_equivalence() {
    let runs = oracle_runs();
    let pass = runs.iter().all(|r| r.br_exact && r.regret_gap <= 1e-9);
    let lines: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "{}: best response exact {}, regret gap {:.1e}",
                r.name, r.br_exact, r.regret_gap
            )
        })
        .collect();
    report(9, pass, &lines.join("; "));
    assert!(pass);
}

#[test]
fn criterion_10_zero_sum_identity() {
    let mut all: Vec<&ZeroSum> = vec![
        &counterexample_run().zero_sum,
        &additive_run().zero_sum,
        &vanilla_run().zero_sum,
        &sampled_run().zero_sum,
        &nearly_run().zero_sum,
    ];
    all.extend(skew_runs().iter().map(|r| &r.zero_sum));
    all.extend(oracle_runs().iter().map(|r| &r.zero_sum));
    let rows: usize = all.iter().map(|z| z.rows.len()).sum();
    let worst = all
        .iter()
        .flat_map(|z| z.rows.iter())
        .map(|&(_, sum, ex)| (sum - ex).abs())
        .fold(0.0, f64::max);
    let pass = worst <= 1e-9;
    let names: Vec<&str> = all.iter().map(|z| z.label.as_str()).collect();
    report(
        10,
        pass,
        &format!(
            "{} runs, {rows} checkpoints ({}), worst gap {worst:.1e}",
            all.len(),
            names.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_11_convergence_slope() {
    let run = sampled_run();
    let slope = run.curve.log_log_slope(1 << 6, 1 << 16).unwrap();
    let pass = (-0.65..=-0.35).contains(&slope);
    report(
        11,
        pass,
        &format!("chance-sampled CFR, seed 0: log-log slope over 2^6..2^16 = {slope:.4}"),
    );
    assert!(pass);
}
