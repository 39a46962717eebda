//! CSV checkpoints of cumulative tables.

use std::collections::HashMap;
use std::path::Path;

use crate::game::{GameTree, InfoPartition, Profile};
use crate::{Error, Result};

const CHECKPOINT_HEADER: [&str; 6] = [
    "iteration",
    "player",
    "infoset",
    "action",
    "cum_regret",
    "cum_avg_weight",
];

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointRow {
    pub iteration: u64,
    /// 1-based.
    pub player: usize,
    pub infoset: String,
    pub action: String,
    pub cum_regret: f64,
    pub cum_avg_weight: f64,
}

/// One row per (infoset, action), in partition order.
pub fn write_checkpoint(
    path: &Path,
    tree: &GameTree,
    partition: &InfoPartition,
    iteration: u64,
    regrets: &[f64],
    weights: &[f64],
) -> Result<()> {
    let shape = Profile::uniform(partition);
    if regrets.len() != shape.flat().len() || weights.len() != shape.flat().len() {
        return Err(Error::ArtifactMismatch("tables do not match the partition".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(CHECKPOINT_HEADER).map_err(|e| Error::csv(path, e))?;
    let it = iteration.to_string();
    for (iid, set) in partition.infosets() {
        let off = shape.offset(iid);
        let player = (set.player + 1).to_string();
        for (k, &a) in set.actions.iter().enumerate() {
            w.write_record([
                it.as_str(),
                &player,
                &set.key,
                tree.label(a),
                &regrets[off + k].to_string(),
                &weights[off + k].to_string(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    rec.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
        line,
        msg: format!("bad `{}` field", CHECKPOINT_HEADER.get(i).unwrap_or(&"?")),
    })
}

pub fn read_checkpoint_rows(path: &Path) -> Result<Vec<CheckpointRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?;
    if header.iter().ne(CHECKPOINT_HEADER) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header {}", CHECKPOINT_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = n + 2;
        out.push(CheckpointRow {
            iteration: field(&rec, 0, line)?,
            player: field(&rec, 1, line)?,
            infoset: field(&rec, 2, line)?,
            action: field(&rec, 3, line)?,
            cum_regret: field(&rec, 4, line)?,
            cum_avg_weight: field(&rec, 5, line)?,
        });
    }
    Ok(out)
}

/// Load tables written by [`write_checkpoint`] back into `partition`'s
/// layout. Every (infoset, action) must appear exactly once.
pub fn read_checkpoint(path: &Path, tree: &GameTree, partition: &InfoPartition) -> Result<(u64, Vec<f64>, Vec<f64>)> {
    let rows = read_checkpoint_rows(path)?;
    let shape = Profile::uniform(partition);
    let mut index = HashMap::new();
    for (iid, set) in partition.infosets() {
        for (k, &a) in set.actions.iter().enumerate() {
            index.insert((set.player + 1, set.key.as_str(), tree.label(a)), shape.offset(iid) + k);
        }
    }
    let n = shape.flat().len();
    let (mut regrets, mut weights, mut seen) = (vec![0.0; n], vec![0.0; n], vec![false; n]);
    let iteration = rows.first().map_or(0, |r| r.iteration);
    for row in &rows {
        if row.iteration != iteration {
            return Err(Error::ArtifactMismatch("rows from several iterations".into()));
        }
        let slot = *index
            .get(&(row.player, row.infoset.as_str(), row.action.as_str()))
            .ok_or_else(|| {
                Error::ArtifactMismatch(format!(
                    "player {} infoset `{}` action `{}` is not in partition `{}`",
                    row.player,
                    row.infoset,
                    row.action,
                    partition.name()
                ))
            })?;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(Error::ArtifactMismatch(format!(
                "duplicate row for infoset `{}`",
                row.infoset
            )));
        }
        regrets[slot] = row.cum_regret;
        weights[slot] = row.cum_avg_weight;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::ArtifactMismatch(format!(
            "{} of {} rows missing",
            seen.iter().filter(|s| !**s).count(),
            n
        )));
    }
    Ok((iteration, regrets, weights))
}

/// `iteration,player,utility_sum` rows, players 1-based.
pub fn write_utilities(path: &Path, rows: &[(u64, Vec<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["iteration", "player", "utility_sum"])
        .map_err(|e| Error::csv(path, e))?;
    for (t, sums) in rows {
        for (i, u) in sums.iter().enumerate() {
            w.write_record([t.to_string(), (i + 1).to_string(), u.to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_utilities(path: &Path) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out: Vec<(u64, Vec<f64>)> = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = n + 2;
        let bad = |msg: &str| Error::Parse { line, msg: msg.into() };
        let t: u64 = rec
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad iteration"))?;
        let p: usize = rec
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad player"))?;
        let u: f64 = rec
            .get(2)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad utility_sum"))?;
        if out.last().is_none_or(|(last, _)| *last != t) {
            out.push((t, Vec::new()));
        }
        let sums = &mut out.last_mut().expect("pushed above").1;
        if p != sums.len() + 1 {
            return Err(bad("players out of order"));
        }
        sums.push(u);
    }
    Ok(out)
}
