//! CFR on the forgetful counterexample: average regret stalls at 0.25.

use irrecall::cli::{run, Cli, Status};

fn main() {
    let cli = <Cli as clap::Parser>::parse_from(["irrecall", "trace-counterexample", "-T", "12"]);
    let mut out = std::io::stdout();
    match run(&cli, &mut out) {
        Ok(Status::Ok) => {}
        Ok(s) => eprintln!("{s:?}"),
        Err(e) => eprintln!("{e}"),
    }
}
