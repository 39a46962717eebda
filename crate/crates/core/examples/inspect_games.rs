//! Build each game family and print its size and abstraction savings.

use irrecall::cli::savings;
use irrecall::game::{content_hash, count_infoset_actions, is_perfect_recall};
use irrecall::games::{build_game, Params};

fn main() -> irrecall::Result<()> {
    let games = [
        ("drp", "sides=6"),
        ("drp", "sides=6 skew=0.5"),
        ("pttt", "width=3 height=2 win=2 memory=fos"),
        ("bluff", "faces=4 r=1"),
        ("counterexample", "xi=0.5"),
    ];
    for (family, params) in games {
        let g = build_game(family, &Params::from_pairs(params.split_whitespace())?)?;
        println!(
            "{:<16} {:<34} nodes {:>7}  actions {:>5} -> {:>5}  savings {:>6.2}%  recall {}  {}",
            family,
            params,
            g.tree.len(),
            count_infoset_actions(&g.refinement),
            count_infoset_actions(&g.abstraction),
            savings(&g.refinement, &g.abstraction),
            is_perfect_recall(&g.tree, &g.abstraction).holds,
            &content_hash(&g.tree)[..12],
        );
    }
    Ok(())
}
