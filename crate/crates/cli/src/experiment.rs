//! κ-sweep orchestration: simulate every (κ, run) cell, compute metrics and
//! write the artifact tree.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use tradegame_core::br::{BrError, SweepRecord};
use tradegame_core::metrics::{MetricsSummary, RegretPoint};
use tradegame_core::seed::{derive, player_seed};
use tradegame_core::{run_br_dynamics, run_no_regret_dynamics, run_swap_dynamics, sample};
use tradegame_core::{BrDynamicsConfig, PlayHistory};

use crate::artifacts::{self, CellSummary, Manifest, ManifestEntry, Summary};
use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{ExperimentError, IoContext};

#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    Play {
        /// Per round and player, the swap-tree level that supplied the action.
        levels: Option<Vec<Vec<usize>>>,
    },
    Sweeps {
        log: Vec<SweepRecord>,
        converged: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub kappa: f64,
    pub run: usize,
    pub eta: f64,
    pub history: PlayHistory,
    pub trace: Trace,
    pub metrics: MetricsSummary,
    /// Per player; empty for best-response dynamics.
    pub regret: Vec<Vec<RegretPoint>>,
}

pub fn seeds(cfg: &ExperimentConfig, run: usize) -> Vec<u64> {
    (0..cfg.volumes.len())
        .map(|i| player_seed(cfg.seed, run as u64, i as u64))
        .collect()
}

/// One run of the configured dynamics at one κ.
pub fn simulate(cfg: &ExperimentConfig, kappa: f64, run: usize) -> Result<RunOutput, ExperimentError> {
    let spec = cfg.game(kappa)?;
    let eta = cfg.eta.resolve(&spec, cfg.rounds)?;
    let seeds = seeds(cfg, run);
    let (history, trace) = match cfg.algo {
        Algorithm::Ftpl => (
            run_no_regret_dynamics(&spec, cfg.rounds, eta, &seeds)?,
            Trace::Play { levels: None },
        ),
        Algorithm::Swap => {
            let out = run_swap_dynamics(&spec, &cfg.swap_config()?, eta, &seeds)?;
            (out.history, Trace::Play { levels: Some(out.levels) })
        }
        Algorithm::BrDynamics => {
            let init = sample::seeded_profile(&spec, derive(seeds[0], 0xB5));
            let br_cfg = BrDynamicsConfig {
                epsilon: cfg.epsilon,
                max_sweeps: cfg.max_sweeps,
            };
            let (profile, log, converged) = match run_br_dynamics(&spec, &init, &br_cfg) {
                Ok(o) => (o.profile, o.log, true),
                Err(BrError::NotConverged { profile, log, .. }) => (profile, log, false),
                Err(e) => return Err(e.into()),
            };
            (
                PlayHistory::new(spec.clone(), vec![profile])?,
                Trace::Sweeps { log, converged },
            )
        }
    };
    let metrics = history.summary()?;
    let regret = match trace {
        Trace::Play { .. } => (0..spec.n())
            .map(|i| history.regret_curve(i, cfg.regret_stride))
            .collect::<Result<Vec<_>, _>>()?,
        Trace::Sweeps { .. } => Vec::new(),
    };
    Ok(RunOutput {
        kappa,
        run,
        eta,
        history,
        trace,
        metrics,
        regret,
    })
}

/// Every cell, κ-major then run order, simulated in parallel.
pub fn simulate_grid(cfg: &ExperimentConfig) -> Result<Vec<RunOutput>, ExperimentError> {
    cfg.validate()?;
    let cells: Vec<(f64, usize)> = cfg
        .kappas
        .iter()
        .flat_map(|&k| (0..cfg.runs).map(move |r| (k, r)))
        .collect();
    cells
        .par_iter()
        .map(|&(k, r)| simulate(cfg, k, r))
        .collect()
}

pub fn kappa_dir(kappa: f64) -> String {
    format!("kappa_{kappa}")
}

pub fn summarize(cfg: &ExperimentConfig, outputs: &[RunOutput]) -> Summary {
    let cells = cfg
        .kappas
        .iter()
        .map(|&k| {
            let runs: Vec<&RunOutput> = outputs.iter().filter(|o| o.kappa == k).collect();
            let metrics: Vec<&MetricsSummary> = runs.iter().map(|o| &o.metrics).collect();
            let (mean, std) = artifacts::aggregate(&metrics);
            let converged_runs = (cfg.algo == Algorithm::BrDynamics).then(|| {
                runs.iter()
                    .filter(|o| matches!(o.trace, Trace::Sweeps { converged: true, .. }))
                    .count()
            });
            CellSummary {
                kappa: k,
                eta: runs.first().map_or(0.0, |o| o.eta),
                runs: runs.len(),
                converged_runs,
                mean,
                std,
            }
        })
        .collect();
    Summary {
        algo: cfg.algo.name().to_string(),
        rounds: cfg.rounds,
        runs: cfg.runs,
        players: cfg.volumes.len(),
        seed: cfg.seed,
        cells,
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, ExperimentError> {
    Ok(BufWriter::new(fs::File::create(path).at(path)?))
}

fn write_run(root: &Path, out: &RunOutput) -> Result<(), ExperimentError> {
    let dir = root.join(kappa_dir(out.kappa)).join(format!("run_{}", out.run));
    fs::create_dir_all(&dir).at(&dir)?;
    let trace = dir.join("trace.csv");
    match &out.trace {
        Trace::Play { levels } => {
            artifacts::write_play_trace(create(&trace)?, out.run, &out.history, levels.as_deref())?;
            artifacts::write_regret(create(&dir.join("regret.csv"))?, out.run, &out.regret)?;
        }
        Trace::Sweeps { log, .. } => artifacts::write_sweep_trace(create(&trace)?, out.run, log)?,
    }
    artifacts::write_metrics(
        create(&dir.join("metrics.csv"))?,
        &[(out.run, out.kappa, &out.metrics)],
    )?;
    Ok(())
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    for entry in fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else if path.file_name().is_some_and(|n| n != "manifest.json") {
            out.push(path);
        }
    }
    Ok(())
}

/// Hashes every file under `root` except the manifest itself.
pub fn build_manifest(root: &Path) -> Result<Manifest, ExperimentError> {
    let mut paths = Vec::new();
    collect_files(root, &mut paths)?;
    let mut files: Vec<ManifestEntry> = paths
        .par_iter()
        .map(|p| {
            let bytes = fs::read(p).at(p)?;
            let rel = p.strip_prefix(root).unwrap_or(p);
            let rel = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            Ok(ManifestEntry {
                path: rel,
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            })
        })
        .collect::<Result<_, ExperimentError>>()?;
    files.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(Manifest { files })
}

/// Runs the whole sweep and writes
/// `out/kappa_<κ>/run_<k>/{trace,metrics,regret}.csv`, `out/metrics.csv`,
/// `out/summary.json` and `out/manifest.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest, ExperimentError> {
    let outputs = simulate_grid(cfg)?;
    let root = cfg.out.as_path();
    fs::create_dir_all(root).at(root)?;
    outputs.par_iter().try_for_each(|o| write_run(root, o))?;

    let rows: Vec<(usize, f64, &MetricsSummary)> =
        outputs.iter().map(|o| (o.run, o.kappa, &o.metrics)).collect();
    artifacts::write_metrics(create(&root.join("metrics.csv"))?, &rows)?;

    let summary = summarize(cfg, &outputs);
    let path = root.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(&path, text).at(&path)?;

    let manifest = build_manifest(root)?;
    let path = root.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).at(&path)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            horizon: 3,
            volumes: vec![4, 4],
            lower: vec![-2, -2],
            upper: vec![3, 3],
            kappas: vec![0.0, 2.0],
            rounds: 30,
            runs: 2,
            regret_stride: 10,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_round_single_run() {
        let cfg = ExperimentConfig {
            rounds: 1,
            runs: 1,
            kappas: vec![1.5],
            ..ExperimentConfig::default()
        };
        let out = simulate_grid(&cfg).unwrap();
        assert_eq!(out.len(), 1);
        let p = &out[0].history.rounds()[0];
        let sum = p.total_cost(0, 1.5).unwrap() + p.total_cost(1, 1.5).unwrap();
        assert_eq!(out[0].metrics.welfare, sum);
        assert_eq!(out[0].metrics.tv, Some(0.0));
    }

    #[test]
    fn runs_use_distinct_seeds_but_repeat_exactly() {
        let cfg = tiny();
        let a = simulate_grid(&cfg).unwrap();
        let b = simulate_grid(&cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].history, a[1].history);
        assert_eq!(a.iter().map(|o| (o.kappa, o.run)).collect::<Vec<_>>(),
                   vec![(0.0, 0), (0.0, 1), (2.0, 0), (2.0, 1)]);
        assert_eq!(a[0].regret[0].iter().map(|p| p.round).collect::<Vec<_>>(), vec![10, 20, 30]);
    }

    #[test]
    fn summary_means_match_rows() {
        let cfg = tiny();
        let out = simulate_grid(&cfg).unwrap();
        let s = summarize(&cfg, &out);
        for cell in &s.cells {
            let rows: Vec<f64> = out.iter().filter(|o| o.kappa == cell.kappa).map(|o| o.metrics.welfare).collect();
            let mean = rows.iter().sum::<f64>() / rows.len() as f64;
            assert!((cell.mean["welfare"] - mean).abs() <= 1e-12);
        }
    }

    #[test]
    fn br_dynamics_cells() {
        let cfg = ExperimentConfig {
            algo: Algorithm::BrDynamics,
            lower: vec![0, 0],
            upper: vec![10, 10],
            kappas: vec![0.0, 1.0],
            runs: 3,
            max_sweeps: 50,
            ..ExperimentConfig::default()
        };
        let out = simulate_grid(&cfg).unwrap();
        for o in out.iter().filter(|o| o.kappa == 0.0) {
            assert!(matches!(o.trace, Trace::Sweeps { converged: true, .. }));
            assert_eq!(o.history.len(), 1);
            assert!(o.metrics.dist_ne <= cfg.epsilon);
        }
        let s = summarize(&cfg, &out);
        assert_eq!(s.cells[0].converged_runs, Some(3));
    }
}
