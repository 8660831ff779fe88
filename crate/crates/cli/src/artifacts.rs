//! CSV and JSON artifact schemas shared with downstream consumers.
//!
//! Players and rounds are 1-based in every file; run ids are 0-based and
//! match the `run_<k>` directory names.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use tradegame_core::br::SweepRecord;
use tradegame_core::metrics::{MetricsSummary, RegretPoint};
use tradegame_core::{GameSpec, PlayHistory, Profile, Schedule};

use crate::error::ExperimentError;

pub const TRACE_HEADER: [&str; 5] = ["run_id", "round", "player", "schedule", "realized_cost"];
pub const SWEEP_HEADER: [&str; 6] = ["run_id", "sweep", "player", "old_cost", "new_cost", "potential"];
pub const REGRET_HEADER: [&str; 5] = ["run_id", "player", "round", "cumulative_regret", "average_regret"];

/// Column names of the per-run metrics row for `players` players.
pub fn metrics_header(players: usize) -> Vec<String> {
    let mut h = vec!["run_id".to_string(), "kappa".into(), "rounds".into()];
    h.extend((1..=players).map(|p| format!("regret_p{p}")));
    h.extend(["dist_ne", "dist_ce", "dist_cce", "tv", "welfare"].map(String::from));
    h
}

pub fn write_play_trace<W: Write>(
    w: W,
    run_id: usize,
    history: &PlayHistory,
    levels: Option<&[Vec<usize>]>,
) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = TRACE_HEADER.to_vec();
    if levels.is_some() {
        header.push("level");
    }
    out.write_record(&header)?;
    let kappa = history.spec().kappa();
    for (r, profile) in history.rounds().iter().enumerate() {
        for (i, s) in profile.schedules().iter().enumerate() {
            let mut row = vec![
                run_id.to_string(),
                (r + 1).to_string(),
                (i + 1).to_string(),
                s.to_string(),
                profile.total_cost(i, kappa)?.to_string(),
            ];
            if let Some(l) = levels {
                row.push(l[r][i].to_string());
            }
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_trace<W: Write>(w: W, run_id: usize, log: &[SweepRecord]) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    for rec in log {
        out.write_record([
            run_id.to_string(),
            (rec.sweep + 1).to_string(),
            (rec.player + 1).to_string(),
            rec.old_cost.to_string(),
            rec.new_cost.to_string(),
            rec.potential.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_regret<W: Write>(
    w: W,
    run_id: usize,
    curves: &[Vec<RegretPoint>],
) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REGRET_HEADER)?;
    for (i, curve) in curves.iter().enumerate() {
        for p in curve {
            out.write_record([
                run_id.to_string(),
                (i + 1).to_string(),
                p.round.to_string(),
                p.cumulative.to_string(),
                p.average.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn metrics_record(run_id: usize, kappa: f64, m: &MetricsSummary) -> Vec<String> {
    let mut row = vec![run_id.to_string(), kappa.to_string(), m.rounds.to_string()];
    row.extend(m.regrets.iter().map(f64::to_string));
    row.push(m.dist_ne.to_string());
    row.push(m.dist_ce.to_string());
    row.push(m.dist_cce.to_string());
    row.push(m.tv.map(|t| t.to_string()).unwrap_or_default());
    row.push(m.welfare.to_string());
    row
}

pub fn write_metrics<W: Write>(w: W, rows: &[(usize, f64, &MetricsSummary)]) -> Result<(), ExperimentError> {
    let players = rows.first().map_or(2, |r| r.2.regrets.len());
    let mut out = csv::Writer::from_writer(w);
    out.write_record(metrics_header(players))?;
    for &(run_id, kappa, m) in rows {
        out.write_record(metrics_record(run_id, kappa, m))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    run_id: usize,
    round: usize,
    player: usize,
    schedule: String,
    #[allow(dead_code)]
    realized_cost: f64,
}

/// Rebuilds per-run play histories from a trace CSV (the optional `level`
/// column is ignored).
pub fn read_play_trace<R: Read>(r: R, spec: &GameSpec) -> Result<BTreeMap<usize, PlayHistory>, ExperimentError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut cells: BTreeMap<usize, BTreeMap<usize, BTreeMap<usize, Schedule>>> = BTreeMap::new();
    for row in rdr.deserialize::<TraceRow>() {
        let row = row?;
        if row.player == 0 || row.player > spec.n() {
            return Err(ExperimentError::Trace(format!(
                "player {} outside 1..={}",
                row.player,
                spec.n()
            )));
        }
        let space = spec.player(row.player - 1)?;
        let s = Schedule::parse(&row.schedule, space)?;
        let slot = cells.entry(row.run_id).or_default().entry(row.round).or_default();
        if slot.insert(row.player, s).is_some() {
            return Err(ExperimentError::Trace(format!(
                "duplicate row for run {} round {} player {}",
                row.run_id, row.round, row.player
            )));
        }
    }
    let mut out = BTreeMap::new();
    for (run, rounds) in cells {
        let mut profiles = Vec::with_capacity(rounds.len());
        for (round, players) in rounds {
            if players.len() != spec.n() {
                return Err(ExperimentError::Trace(format!(
                    "run {run} round {round} has {} of {} players",
                    players.len(),
                    spec.n()
                )));
            }
            profiles.push(Profile::new(spec, players.into_values().collect())?);
        }
        out.insert(run, PlayHistory::new(spec.clone(), profiles)?);
    }
    if out.is_empty() {
        return Err(ExperimentError::Trace("trace has no rows".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub kappa: f64,
    pub eta: f64,
    pub runs: usize,
    /// Only present for best-response dynamics.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub converged_runs: Option<usize>,
    pub mean: BTreeMap<String, f64>,
    /// Sample standard deviation across runs (0 for a single run).
    pub std: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algo: String,
    pub rounds: usize,
    pub runs: usize,
    pub players: usize,
    pub seed: u64,
    pub cells: Vec<CellSummary>,
}

/// Mean and sample std of each metrics column across runs, in run order.
pub fn aggregate(rows: &[&MetricsSummary]) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for m in rows {
        for (i, r) in m.regrets.iter().enumerate() {
            columns.entry(format!("regret_p{}", i + 1)).or_default().push(*r);
        }
        columns.entry("dist_ne".into()).or_default().push(m.dist_ne);
        columns.entry("dist_ce".into()).or_default().push(m.dist_ce);
        columns.entry("dist_cce".into()).or_default().push(m.dist_cce);
        if let Some(tv) = m.tv {
            columns.entry("tv".into()).or_default().push(tv);
        }
        columns.entry("welfare".into()).or_default().push(m.welfare);
    }
    let mut mean = BTreeMap::new();
    let mut std = BTreeMap::new();
    for (k, v) in columns {
        let n = v.len() as f64;
        let mu = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean.insert(k.clone(), mu);
        std.insert(k, var.sqrt());
    }
    (mean, std)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tradegame_core::{run_no_regret_dynamics, ActionSpace};

    fn spec() -> GameSpec {
        GameSpec::symmetric(2, ActionSpace::new(4, 3, -2, 3).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn trace_round_trip() {
        let h = run_no_regret_dynamics(&spec(), 25, 5.0, &[1, 2]).unwrap();
        let mut buf = Vec::new();
        write_play_trace(&mut buf, 3, &h, None).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("run_id,round,player,schedule,realized_cost\n3,1,1,\""));
        let back = read_play_trace(&buf[..], &spec()).unwrap();
        assert_eq!(back.keys().copied().collect::<Vec<_>>(), vec![3]);
        assert_eq!(back[&3], h);
    }

    #[test]
    fn level_column_is_accepted() {
        let h = run_no_regret_dynamics(&spec(), 4, 5.0, &[1, 2]).unwrap();
        let levels = vec![vec![0, 1]; 4];
        let mut buf = Vec::new();
        write_play_trace(&mut buf, 0, &h, Some(&levels)).unwrap();
        assert!(String::from_utf8_lossy(&buf).lines().next().unwrap().ends_with(",level"));
        assert_eq!(read_play_trace(&buf[..], &spec()).unwrap()[&0], h);
    }

    #[test]
    fn malformed_traces_are_rejected() {
        let s = spec();
        let missing = "run_id,round,player,schedule,realized_cost\n0,1,1,\"2,1,1\",0\n";
        assert!(read_play_trace(missing.as_bytes(), &s).is_err());
        let infeasible = "run_id,round,player,schedule,realized_cost\n0,1,1,\"4,0,0\",0\n0,1,2,\"2,1,1\",0\n";
        assert!(read_play_trace(infeasible.as_bytes(), &s).is_err());
        let bad_player = "run_id,round,player,schedule,realized_cost\n0,1,3,\"2,1,1\",0\n";
        assert!(read_play_trace(bad_player.as_bytes(), &s).is_err());
        assert!(read_play_trace("run_id,round,player,schedule,realized_cost\n".as_bytes(), &s).is_err());
    }

    #[test]
    fn aggregate_uses_sample_std() {
        let m = |w: f64| MetricsSummary {
            rounds: 1,
            regrets: vec![w, 0.0],
            dist_ne: 0.0,
            dist_ce: 0.0,
            dist_cce: 0.0,
            tv: None,
            welfare: w,
        };
        let (a, b, c) = (m(1.0), m(2.0), m(6.0));
        let (mean, std) = aggregate(&[&a, &b, &c]);
        assert_eq!(mean["welfare"], 3.0);
        assert!((std["welfare"] - 7.0f64.sqrt()).abs() < 1e-12);
        assert!(!mean.contains_key("tv"));
        let (_, single) = aggregate(&[&a]);
        assert_eq!(single["welfare"], 0.0);
    }

    #[test]
    fn metrics_header_scales_with_players() {
        assert_eq!(
            metrics_header(2).join(","),
            "run_id,kappa,rounds,regret_p1,regret_p2,dist_ne,dist_ce,dist_cce,tv,welfare"
        );
        assert_eq!(metrics_header(3).len(), 11);
    }
}
