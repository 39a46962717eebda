//! Classify the abstractions of the built-in games.

use irrecall::abstraction::make_refinement;
use irrecall::games::{build_drp, build_drp3, build_game, DrpConfig, Params};
use irrecall::verifier::{bound_constants, classify};

fn main() -> irrecall::Result<()> {
    let mut games = vec![
        ("DRP-IR", build_drp(&DrpConfig::default())?),
        ("Skew-DRP-IR(0.5)", build_drp(&DrpConfig::default().with_skew(0.5))?),
        ("DRP3 2-sided", build_drp3(&DrpConfig::three_round().with_sides(2))?),
    ];
    games.push(("counterexample", build_game("counterexample", &Params::new())?));
    for (name, g) in &games {
        let map = make_refinement(&g.tree, &g.abstraction, &g.refinement)?;
        let report = classify(&map)?;
        println!("{name}: {:?}, max delta {}", report.verdict, report.max_delta());
        if report.holds() {
            for b in bound_constants(&report, &map)? {
                println!("  player {} bound at T=1000: {:.3}", b.player + 1, b.skew_bound(1000));
            }
        } else if let Some((pair, w)) = report.first_failure() {
            println!("  {}: {w}", g.abstraction.infoset(pair.coarse).key);
        }
    }
    Ok(())
}
