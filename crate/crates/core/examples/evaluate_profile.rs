//! Best responses, exploitability and average regret for a solved game.

use irrecall::cfr::{normalize, run, CfrConfig};
use irrecall::evaluator::{average_regret, best_response_value, exploitability};
use irrecall::game::Profile;
use irrecall::games::{build_drp, DrpConfig};

fn main() -> irrecall::Result<()> {
    let g = build_drp(&DrpConfig::default().with_sides(2))?;
    let (tree, full) = (&g.tree, &g.refinement);
    let uniform = Profile::uniform(full);
    println!(
        "uniform exploitability {:.6}",
        exploitability(tree, full, full, &uniform)?
    );
    let solver = run(tree, full, None, CfrConfig::vanilla(500))?;
    let avg = normalize(full, solver.weights());
    for i in 0..2 {
        let br = best_response_value(tree, full, &avg, i)?;
        let r = average_regret(tree, full, full, &avg, solver.utility_sums()[i], solver.iteration(), i)?;
        println!(
            "player {}: best response {:.6}, average regret {:.6}",
            i + 1,
            br.value,
            r
        );
    }
    println!("exploitability {:.6}", exploitability(tree, full, full, &avg)?);
    Ok(())
}
