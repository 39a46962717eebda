//! Chance-sampled CFR on DRP-IR with per-checkpoint average regret.

use irrecall::abstraction::make_refinement;
use irrecall::cfr::{run, CfrConfig, Schedule, Variant};
use irrecall::evaluator::RegretCurve;
use irrecall::games::{build_drp, DrpConfig};
use irrecall::verifier::{bound_constants, check_well_formed};

fn main() -> irrecall::Result<()> {
    let g = build_drp(&DrpConfig::default())?;
    let map = make_refinement(&g.tree, &g.abstraction, &g.refinement)?;
    let report = check_well_formed(&map)?;
    let bounds = bound_constants(&report, &map)?;
    let config = CfrConfig {
        variant: Variant::ChanceSampled,
        seed: 7,
        schedule: Schedule::PowersOfTwo,
        ..CfrConfig::vanilla(1 << 12)
    };
    let solver = run(&g.tree, &g.abstraction, Some(&map), config)?;
    let curve = RegretCurve::from_solver(&solver, &g.refinement, Some(&bounds))?;
    print!("{}", curve.to_csv());
    if let Some(s) = curve.log_log_slope(1 << 4, 1 << 12) {
        println!("log-log slope {s:.3}");
    }
    Ok(())
}
