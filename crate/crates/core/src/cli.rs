//! Command-line front end: `inspect`, `verify`, `solve`, `evaluate` and
//! `trace-counterexample`.
//!
//! A solve writes into one directory: `manifest.txt` (key=value lines) and
//! CSV artifacts whose file names carry the first 12 hex digits of the game's
//! content hash, e.g. `checkpoint_64_3fa2c1d09b7e.csv`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::abstraction::make_refinement;
use crate::cfr::{
    read_checkpoint, read_utilities, write_checkpoint, write_utilities, CfrConfig, Schedule, Snapshot, Solver, Variant,
};
use crate::evaluator::{bound_compliance, direct_average_regret, RegretCurve};
use crate::game::{
    content_hash, count_infoset_actions, expected_utility, is_perfect_recall, write_tree, InfoPartition, Profile,
};
use crate::games::{build_game, BuiltGame, CounterexampleConfig, Params};
use crate::verifier::{bound_constants, classify, Check, Verdict, Verifier};
use crate::{Error, Result};

/// Process exit status.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    /// Validation failed: bad input, a failed check, a broken artifact.
    Invalid = 1,
    /// Build refused, verdict undecided, or artifacts from another game.
    Refused = 2,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s as u8)
    }
}

impl Status {
    pub fn of_error(e: &Error) -> Status {
        match e {
            Error::BuildRefused { .. } | Error::EnumerationCap { .. } | Error::ArtifactMismatch(_) => Status::Refused,
            _ => Status::Invalid,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "irrecall",
    version,
    about = "CFR on imperfect-recall games and abstraction checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print tree and partition sizes and the abstraction's action savings.
    Inspect(InspectArgs),
    /// Check an abstraction for well-formedness against its refinement.
    Verify(VerifyArgs),
    /// Run CFR and write checkpoints into a run directory.
    Solve(SolveArgs),
    /// Measure full-game average regret at every checkpoint of a run.
    Evaluate(EvaluateArgs),
    /// Print CFR's strategies on the counterexample game, iteration by iteration.
    TraceCounterexample(TraceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GameArgs {
    /// drp, drp3, skew-drp, bluff, pttt or counterexample.
    pub game: String,
    /// Game parameters as key=value.
    pub params: Vec<String>,
    /// File of key=value lines; command-line parameters override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Abstract partition: its name, `abstract`, or `full` for none.
    #[arg(long, default_value = "abstract")]
    pub abstraction: String,
}

impl GameArgs {
    pub fn params(&self) -> Result<Params> {
        let mut p = match &self.config {
            Some(path) => Params::from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?,
            None => Params::new(),
        };
        p.merge(&Params::from_pairs(self.params.iter().map(String::as_str))?);
        Ok(p)
    }

    pub fn build(&self) -> Result<BuiltGame> {
        build_game(&self.game, &self.params()?)
    }
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub game_args: GameArgs,
    /// Also write the tree in text form.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub game_args: GameArgs,
    /// auto, well, skew or nearly.
    #[arg(long, default_value = "auto")]
    pub check: String,
    /// Write one row per checked pair.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub game_args: GameArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, short = 'T', default_value_t = 1000)]
    pub iterations: u64,
    /// vanilla or chance.
    #[arg(long, default_value = "vanilla")]
    pub variant: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// pow2, every:N, or a comma list of iterations.
    #[arg(long, default_value = "pow2")]
    pub schedule: String,
    #[arg(long)]
    pub alternating: bool,
    /// Continue the run in `out` from its last checkpoint.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Run directory written by `solve`.
    pub run: PathBuf,
    /// Game to evaluate against, e.g. "drp sides=6"; defaults to the manifest's.
    #[arg(long)]
    pub game: Option<String>,
    /// Curve CSV path; defaults to `curve_<hash>.csv` in the run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long, default_value_t = 0.5)]
    pub xi: f64,
    #[arg(long, short = 'T', default_value_t = 10)]
    pub iterations: u64,
}

/// Parse arguments, run, report errors on stderr.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    match run(&cli, &mut out) {
        Ok(s) => s.into(),
        Err(e) => {
            eprintln!("error: {e}");
            Status::of_error(&e).into()
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Status> {
    match &cli.command {
        Command::Inspect(a) => inspect(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Solve(a) => solve(a, out),
        Command::Evaluate(a) => evaluate(a, out),
        Command::TraceCounterexample(a) => trace_counterexample(a, out),
    }
}

fn io(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn short_hash(hash: &str) -> &str {
    &hash[..12]
}

/// (1 − |A_abs| / |A_full|) × 100.
pub fn savings(full: &InfoPartition, abstraction: &InfoPartition) -> f64 {
    let (a, f) = (count_infoset_actions(abstraction), count_infoset_actions(full));
    (1.0 - a as f64 / f as f64) * 100.0
}

pub fn inspect(args: &InspectArgs, out: &mut dyn Write) -> Result<Status> {
    let g = args.game_args.build()?;
    let abs = g.partition(&args.game_args.abstraction)?;
    let tree = &g.tree;
    writeln!(out, "game       {}", g.name).map_err(io)?;
    writeln!(out, "hash       {}", content_hash(tree)).map_err(io)?;
    writeln!(out, "nodes      {}", tree.len()).map_err(io)?;
    writeln!(out, "terminals  {}", tree.terminals().count()).map_err(io)?;
    writeln!(
        out,
        "{:<10} {:>9} {:>9} {:>14}",
        "partition", "infosets", "actions", "perfect_recall"
    )
    .map_err(io)?;
    let mut rows = vec![&g.refinement];
    if !std::ptr::eq(abs, &g.refinement) {
        rows.push(abs);
    }
    for p in rows {
        let pr = if is_perfect_recall(tree, p).holds { "yes" } else { "no" };
        writeln!(
            out,
            "{:<10} {:>9} {:>9} {:>14}",
            p.name(),
            p.len(),
            count_infoset_actions(p),
            pr
        )
        .map_err(io)?;
    }
    writeln!(out, "savings    {:.2}%", savings(&g.refinement, abs)).map_err(io)?;
    if let Some(path) = &args.dump {
        fs::write(path, write_tree(tree)).map_err(|e| Error::io(path, e))?;
    }
    Ok(Status::Ok)
}

pub fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<Status> {
    let g = args.game_args.build()?;
    let abs = g.partition(&args.game_args.abstraction)?;
    let map = make_refinement(&g.tree, abs, &g.refinement)?;
    let report = match args.check.as_str() {
        "auto" => classify(&map)?,
        c => {
            let check = match c {
                "well" => Check::Well,
                "skew" => Check::Skew,
                "nearly" => Check::Nearly,
                _ => return Err(Error::InvalidConfig(format!("unknown check `{c}`"))),
            };
            Verifier::new(&map)?.run(check)?
        }
    };
    write!(out, "{}", report.to_text(abs, &g.refinement)).map_err(io)?;
    if let Some(path) = &args.csv {
        report.write_csv(path, abs, &g.refinement)?;
    }
    if report.holds() {
        for b in bound_constants(&report, &map)? {
            writeln!(
                out,
                "player {}: range {} K {} |A| {} floor {}",
                b.player + 1,
                b.utility_range,
                b.k_sum,
                b.max_actions,
                b.floor
            )
            .map_err(io)?;
        }
    }
    writeln!(out, "verdict {}", report.verdict).map_err(io)?;
    Ok(match report.verdict {
        Verdict::Undecided => Status::Refused,
        _ if report.holds() => Status::Ok,
        _ => Status::Invalid,
    })
}

pub fn parse_schedule(s: &str) -> Result<Schedule> {
    let bad = || Error::InvalidConfig(format!("bad schedule `{s}`"));
    match s {
        "pow2" | "powers-of-two" => Ok(Schedule::PowersOfTwo),
        _ => {
            if let Some(n) = s.strip_prefix("every:") {
                return Ok(Schedule::Every(n.parse().map_err(|_| bad())?));
            }
            let mut at: Vec<u64> = s
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            at.sort_unstable();
            at.dedup();
            Ok(Schedule::At(at))
        }
    }
}

/// A run directory's `manifest.txt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub game: String,
    pub params: Params,
    pub abstraction: String,
    pub hash: String,
    pub variant: String,
    pub seed: u64,
    pub iterations: u64,
    pub schedule: String,
    pub alternating: bool,
}

impl Manifest {
    pub const FILE: &'static str = "manifest.txt";

    pub fn to_text(&self) -> String {
        let mut s = format!("game={}\n", self.game);
        for (k, v) in self.params.iter() {
            s += &format!("param.{k}={v}\n");
        }
        s += &format!(
            "abstraction={}\nhash={}\nvariant={}\nseed={}\niterations={}\nschedule={}\nalternating={}\n",
            self.abstraction, self.hash, self.variant, self.seed, self.iterations, self.schedule, self.alternating
        );
        s
    }

    pub fn read(dir: &Path) -> Result<Manifest> {
        let path = dir.join(Self::FILE);
        let p = Params::from_text(&fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?)?;
        let get = |k: &str| {
            p.get(k)
                .map(str::to_string)
                .ok_or_else(|| Error::ArtifactMismatch(format!("{} lacks `{k}`", path.display())))
        };
        let num = |k: &str| -> Result<u64> {
            get(k)?
                .parse()
                .map_err(|_| Error::ArtifactMismatch(format!("bad `{k}` in {}", path.display())))
        };
        let mut params = Params::new();
        for (k, v) in p.iter() {
            if let Some(k) = k.strip_prefix("param.") {
                params.set(k, v);
            }
        }
        Ok(Manifest {
            game: get("game")?,
            params,
            abstraction: get("abstraction")?,
            hash: get("hash")?,
            variant: get("variant")?,
            seed: num("seed")?,
            iterations: num("iterations")?,
            schedule: get("schedule")?,
            alternating: get("alternating")? == "true",
        })
    }

    pub fn game_args(&self) -> GameArgs {
        GameArgs {
            game: self.game.clone(),
            params: self.params.iter().map(|(k, v)| format!("{k}={v}")).collect(),
            config: None,
            abstraction: self.abstraction.clone(),
        }
    }
}

/// Artifact file name `<kind>_<iteration>_<hash12>.csv`, or `<kind>_<hash12>.csv`.
pub fn artifact_name(kind: &str, iteration: Option<u64>, hash: &str) -> String {
    match iteration {
        Some(t) => format!("{kind}_{t}_{}.csv", short_hash(hash)),
        None => format!("{kind}_{}.csv", short_hash(hash)),
    }
}

/// Checkpoint iterations present in `dir`, ascending. Files of the same kind
/// for another game are an error.
pub fn checkpoints(dir: &Path, hash: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let name = entry.map_err(|e| Error::io(dir, e))?.file_name();
        let Some(rest) = name.to_str().and_then(|n| n.strip_prefix("checkpoint_")) else {
            continue;
        };
        let Some((t, h)) = rest.strip_suffix(".csv").and_then(|r| r.split_once('_')) else {
            continue;
        };
        if h != short_hash(hash) {
            return Err(Error::ArtifactMismatch(format!(
                "{} was written for game {h}, expected {}",
                name.to_string_lossy(),
                short_hash(hash)
            )));
        }
        if let Ok(t) = t.parse() {
            out.push(t);
        }
    }
    out.sort_unstable();
    Ok(out)
}

fn write_strategy(
    path: &Path,
    tree: &crate::game::GameTree,
    partition: &InfoPartition,
    t: u64,
    p: &Profile,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["iteration", "player", "infoset", "action", "probability"])
        .map_err(|e| Error::csv(path, e))?;
    for (iid, set) in partition.infosets() {
        for (&a, x) in set.actions.iter().zip(p.get(iid)) {
            w.write_record([
                t.to_string(),
                (set.player + 1).to_string(),
                set.key.clone(),
                tree.label(a).into(),
                x.to_string(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn load_snapshot(
    dir: &Path,
    g: &BuiltGame,
    abs: &InfoPartition,
    hash: &str,
    t: u64,
    utilities: &BTreeMap<u64, Vec<f64>>,
) -> Result<Snapshot> {
    let (it, regrets, weights) = read_checkpoint(&dir.join(artifact_name("checkpoint", Some(t), hash)), &g.tree, abs)?;
    let (fine_regrets, fine_weights) = if std::ptr::eq(abs, &g.refinement) {
        (None, None)
    } else {
        let (_, r, w) = read_checkpoint(&dir.join(artifact_name("fine", Some(t), hash)), &g.tree, &g.refinement)?;
        (Some(r), Some(w))
    };
    let utility_sums = utilities
        .get(&t)
        .cloned()
        .ok_or_else(|| Error::ArtifactMismatch(format!("no utility sums for iteration {t}")))?;
    if it != t {
        return Err(Error::ArtifactMismatch(format!(
            "checkpoint file for {t} holds iteration {it}"
        )));
    }
    Ok(Snapshot {
        iteration: t,
        regrets,
        weights,
        fine_regrets,
        fine_weights,
        utility_sums,
    })
}

pub fn solve(args: &SolveArgs, out: &mut dyn Write) -> Result<Status> {
    let g = args.game_args.build()?;
    let abs = g.partition(&args.game_args.abstraction)?;
    let hash = content_hash(&g.tree);
    let variant: Variant = args.variant.parse()?;
    let schedule = parse_schedule(&args.schedule)?;
    let dir = &args.out;
    let manifest_path = dir.join(Manifest::FILE);
    let manifest = Manifest {
        game: args.game_args.game.clone(),
        params: args.game_args.params()?,
        abstraction: abs.name().to_string(),
        hash: hash.clone(),
        variant: args.variant.clone(),
        seed: args.seed,
        iterations: args.iterations,
        schedule: args.schedule.clone(),
        alternating: args.alternating,
    };

    let separate = !std::ptr::eq(abs, &g.refinement);
    let map = if separate {
        Some(make_refinement(&g.tree, abs, &g.refinement)?)
    } else {
        None
    };
    let config = CfrConfig {
        variant,
        iterations: args.iterations,
        seed: args.seed,
        alternating: args.alternating,
        schedule: schedule.clone(),
        record_profiles: false,
    };
    let mut solver = Solver::new(&g.tree, abs, map.as_ref(), config)?;
    let mut utilities: BTreeMap<u64, Vec<f64>> = BTreeMap::new();

    if manifest_path.exists() {
        if !args.resume {
            return Err(Error::InvalidConfig(format!(
                "{} already holds a run; pass --resume to continue it",
                dir.display()
            )));
        }
        let old = Manifest::read(dir)?;
        if old.hash != hash {
            return Err(Error::ArtifactMismatch(format!(
                "run in {} is for game {}, not {}",
                dir.display(),
                short_hash(&old.hash),
                short_hash(&hash)
            )));
        }
        let same = Manifest {
            iterations: old.iterations,
            ..manifest.clone()
        };
        if old != same {
            return Err(Error::InvalidConfig("resume needs the original solver settings".into()));
        }
        let upath = dir.join(artifact_name("utilities", None, &hash));
        utilities = read_utilities(&upath)?.into_iter().collect();
        if let Some(&t) = checkpoints(dir, &hash)?.iter().rev().find(|&&t| t <= args.iterations) {
            let snap = load_snapshot(dir, &g, abs, &hash, t, &utilities)?;
            solver.resume(&snap)?;
            utilities.retain(|&k, _| k <= t);
            writeln!(out, "resumed at iteration {t}").map_err(io)?;
        }
    } else if args.resume {
        return Err(Error::InvalidConfig(format!("nothing to resume in {}", dir.display())));
    } else {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(&manifest_path, manifest.to_text()).map_err(|e| Error::io(&manifest_path, e))?;

    while solver.iteration() < args.iterations {
        let t = solver.iteration() + 1;
        let keep = schedule.contains(t, args.iterations);
        let played = keep.then(|| solver.current_profile().clone());
        solver.iterate();
        let Some(played) = played else { continue };
        let path = dir.join(artifact_name("checkpoint", Some(t), &hash));
        write_checkpoint(&path, &g.tree, abs, t, solver.regrets(), solver.weights())?;
        if let (Some(r), Some(w)) = (solver.fine_regrets(), solver.fine_weights()) {
            let path = dir.join(artifact_name("fine", Some(t), &hash));
            write_checkpoint(&path, &g.tree, &g.refinement, t, r, w)?;
        }
        write_strategy(
            &dir.join(artifact_name("strategy", Some(t), &hash)),
            &g.tree,
            abs,
            t,
            &played,
        )?;
        utilities.insert(t, solver.utility_sums().to_vec());
        let rows: Vec<(u64, Vec<f64>)> = utilities.iter().map(|(k, v)| (*k, v.clone())).collect();
        write_utilities(&dir.join(artifact_name("utilities", None, &hash)), &rows)?;
        writeln!(out, "checkpoint {t}").map_err(io)?;
    }
    writeln!(out, "done: {} iterations in {}", solver.iteration(), dir.display()).map_err(io)?;
    Ok(Status::Ok)
}

pub fn evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<Status> {
    let dir = &args.run;
    let manifest = Manifest::read(dir)?;
    let game_args = match &args.game {
        Some(words) => {
            let words: Vec<String> = words.split_whitespace().map(str::to_string).collect();
            let (game, params) = words
                .split_first()
                .ok_or_else(|| Error::InvalidConfig("--game needs a family".into()))?;
            GameArgs {
                game: game.clone(),
                params: params.to_vec(),
                config: None,
                abstraction: manifest.abstraction.clone(),
            }
        }
        None => manifest.game_args(),
    };
    let g = game_args.build()?;
    let hash = content_hash(&g.tree);
    if hash != manifest.hash {
        return Err(Error::ArtifactMismatch(format!(
            "run was made on game {}, this game is {}",
            short_hash(&manifest.hash),
            short_hash(&hash)
        )));
    }
    let abs = g.partition(&manifest.abstraction)?;
    let ts = checkpoints(dir, &hash)?;
    let utilities: BTreeMap<u64, Vec<f64>> = read_utilities(&dir.join(artifact_name("utilities", None, &hash)))?
        .into_iter()
        .collect();
    let snapshots = ts
        .iter()
        .map(|&t| load_snapshot(dir, &g, abs, &hash, t, &utilities))
        .collect::<Result<Vec<_>>>()?;

    let map = make_refinement(&g.tree, abs, &g.refinement)?;
    let report = classify(&map)?;
    let bounds = if report.holds() {
        Some(bound_constants(&report, &map)?)
    } else {
        None
    };
    let fine = (!std::ptr::eq(abs, &g.refinement)).then_some(&g.refinement);
    let curve = RegretCurve::from_snapshots(&g.tree, &g.refinement, abs, fine, &snapshots, bounds.as_deref())?;
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| dir.join(artifact_name("curve", None, &hash)));
    curve.write_csv(&path)?;
    write!(out, "{}", curve.to_csv()).map_err(io)?;
    if let (Some(first), Some(last)) = (curve.points.first(), curve.points.last()) {
        if let Some(s) = curve.log_log_slope(first.iteration, last.iteration) {
            writeln!(out, "log-log slope {s:.4}").map_err(io)?;
        }
    }
    writeln!(out, "verdict {}", report.verdict).map_err(io)?;
    if report.holds() {
        let c = bound_compliance(&curve, &report, &map)?;
        writeln!(
            out,
            "bound {}",
            if c.all_pass() {
                "holds at every checkpoint"
            } else {
                "VIOLATED"
            }
        )
        .map_err(io)?;
        return Ok(if c.all_pass() { Status::Ok } else { Status::Invalid });
    }
    Ok(Status::Ok)
}

pub fn trace_counterexample(args: &TraceArgs, out: &mut dyn Write) -> Result<Status> {
    let cfg = CounterexampleConfig { xi: args.xi };
    let g = crate::games::build_counterexample(&cfg)?;
    let map = make_refinement(&g.tree, &g.abstraction, &g.refinement)?;
    let config = CfrConfig {
        record_profiles: true,
        ..CfrConfig::vanilla(args.iterations)
    };
    let mut solver = Solver::new(&g.tree, &g.abstraction, Some(&map), config)?;
    let abs = &g.abstraction;
    let cols: Vec<_> = abs.infosets().collect();
    let mut head = String::from("t");
    for (_, set) in &cols {
        head += &format!(" {}:{}", set.key, g.tree.label(set.actions[0]));
    }
    writeln!(out, "{head} u1 avg_regret_p1").map_err(io)?;
    while solver.iteration() < args.iterations {
        solver.iterate();
        let t = solver.iteration() as usize;
        let sigma = &solver.profiles()[t - 1];
        let mut line = t.to_string();
        for (iid, _) in &cols {
            line += &format!(" {}", sigma.get(*iid)[0]);
        }
        let u1 = expected_utility(&g.tree, abs, sigma, 0);
        let r = direct_average_regret(&g.tree, &g.refinement, abs, solver.profiles(), 0)?;
        writeln!(out, "{line} {u1} {r}").map_err(io)?;
    }
    Ok(Status::Ok)
}
