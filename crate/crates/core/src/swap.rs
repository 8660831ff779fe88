//! Block-recursive swap-regret wrapper around FTPL.
//!
//! Each player keeps `d` FTPL instances. Level `ℓ` (0 at the top) takes one
//! step every `M^{d-1-ℓ}` rounds, learns from the mean cost vector of its
//! block and is reset whenever its parent takes a step. The action played in
//! each round is the current recommendation of a uniformly drawn level.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dp::DpError;
use crate::ftpl::{cost_vector, CostVector, DpOracle, FtplLearner, Oracle};
use crate::game::{GameSpec, Profile, Schedule};
use crate::metrics::PlayHistory;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SwapError {
    #[error("block size and depth must be positive")]
    Degenerate,
    #[error("rounds {rounds} outside [M^(d-1), M^d] for M={block}, d={depth}")]
    RoundsOutOfRange { block: usize, depth: usize, rounds: usize },
    #[error(transparent)]
    Dp(#[from] DpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeSwapConfig {
    block: usize,
    depth: usize,
    rounds: usize,
}

impl TreeSwapConfig {
    pub fn new(block: usize, depth: usize, rounds: usize) -> Result<Self, SwapError> {
        if block == 0 || depth == 0 {
            return Err(SwapError::Degenerate);
        }
        let out = SwapError::RoundsOutOfRange { block, depth, rounds };
        let lower = block.checked_pow(depth as u32 - 1).ok_or(out.clone())?;
        let upper = block.checked_pow(depth as u32);
        if rounds < lower || upper.is_some_and(|u| rounds > u) {
            return Err(out);
        }
        Ok(Self { block, depth, rounds })
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Rounds per step of `level`.
    pub fn step_length(&self, level: usize) -> usize {
        let exp = (self.depth - 1 - level) as u32;
        self.block.saturating_pow(exp)
    }

    /// Additive overhead `3/d` of the swap-regret guarantee.
    pub fn overhead(&self) -> f64 {
        3.0 / self.depth as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapHistory {
    pub history: PlayHistory,
    /// `levels[r][i]`: level whose recommendation player `i` played in round `r`.
    pub levels: Vec<Vec<usize>>,
}

struct Level {
    learner: FtplLearner,
    step: usize,
    current: Option<Schedule>,
    block_sum: CostVector,
    block_count: usize,
}

struct TreePlayer {
    levels: Vec<Level>,
    chooser: ChaCha8Rng,
}

impl TreePlayer {
    fn new(cfg: &TreeSwapConfig, horizon: usize, eta: f64, player_seed: u64) -> Self {
        let levels = (0..cfg.depth)
            .map(|l| {
                let s = if l == 0 { player_seed } else { seed::derive(player_seed, l as u64) };
                Level {
                    learner: FtplLearner::new(horizon, eta, s),
                    step: cfg.step_length(l),
                    current: None,
                    block_sum: CostVector::zeros(horizon),
                    block_count: 0,
                }
            })
            .collect();
        let chooser = ChaCha8Rng::seed_from_u64(seed::derive(player_seed, u64::MAX));
        Self { levels, chooser }
    }
}

pub fn run_swap_dynamics(
    spec: &GameSpec,
    cfg: &TreeSwapConfig,
    eta: f64,
    seeds: &[u64],
) -> Result<SwapHistory, SwapError> {
    run_swap_dynamics_with(&DpOracle, spec, cfg, eta, seeds)
}

pub fn run_swap_dynamics_with<O: Oracle>(
    oracle: &O,
    spec: &GameSpec,
    cfg: &TreeSwapConfig,
    eta: f64,
    seeds: &[u64],
) -> Result<SwapHistory, SwapError> {
    assert_eq!(seeds.len(), spec.n(), "one seed per player");
    let kappa = spec.kappa();
    let horizon = spec.horizon();
    let mut players: Vec<TreePlayer> = seeds
        .iter()
        .map(|&s| TreePlayer::new(cfg, horizon, eta, s))
        .collect();
    let mut played = Vec::with_capacity(cfg.rounds);
    let mut chosen = Vec::with_capacity(cfg.rounds);

    for r in 0..cfg.rounds {
        let mut schedules = Vec::with_capacity(spec.n());
        let mut picks = Vec::with_capacity(spec.n());
        for (player, space) in players.iter_mut().zip(spec.players()) {
            for (l, level) in player.levels.iter_mut().enumerate() {
                if r % level.step == 0 {
                    if l > 0 && r % (level.step * cfg.block) == 0 {
                        level.learner.reset();
                    }
                    level.current = Some(level.learner.draw(oracle, space, kappa)?);
                }
            }
            let pick = if cfg.depth == 1 {
                0
            } else {
                player.chooser.random_range(0..cfg.depth)
            };
            schedules.push(player.levels[pick].current.clone().expect("drawn at block start"));
            picks.push(pick);
        }
        let profile = Profile::from_valid(schedules);
        for (i, player) in players.iter_mut().enumerate() {
            let h = cost_vector(&profile, i, kappa).expect("index in range");
            for level in player.levels.iter_mut() {
                level.block_sum.add_assign(&h);
                level.block_count += 1;
                if level.block_count == level.step {
                    let mean = level.block_sum.scaled(1.0 / level.block_count as f64);
                    level.learner.observe(&mean);
                    level.block_sum = CostVector::zeros(horizon);
                    level.block_count = 0;
                }
            }
        }
        played.push(profile);
        chosen.push(picks);
    }
    Ok(SwapHistory {
        history: PlayHistory::from_valid(spec.clone(), played),
        levels: chosen,
    })
}
