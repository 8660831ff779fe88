//! Trading-game best response and ε-best-response dynamics.

use alloc::vec::Vec;

use thiserror::Error;

use crate::dp::{self, DpError, OneStepCost};
use crate::game::{ActionSpace, GameError, GameSpec, Profile, Schedule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error("epsilon must be positive and max_sweeps at least 1")]
    BadConfig,
    #[error("no convergence after {sweeps} sweeps ({} deviations logged)", .log.len())]
    NotConverged {
        sweeps: usize,
        profile: Profile,
        log: Vec<SweepRecord>,
    },
}

/// The one-step trading cost of player `i` against fixed opponents:
/// `k·(k + Σ_{j≠i} a'_j(t)) + κ·k·(held + Σ_{j≠i} a_j(t-1))`.
#[derive(Debug, Clone)]
pub struct TradingCost {
    kappa: f64,
    others_trade: Vec<i64>,
    others_held: Vec<i64>,
}

impl TradingCost {
    pub fn new(profile: &Profile, i: usize, kappa: f64) -> Result<Self, GameError> {
        profile.schedule(i)?;
        let horizon = profile.horizon();
        let mut others_trade = alloc::vec![0; horizon];
        let mut others_held = alloc::vec![0; horizon];
        for (j, s) in profile.schedules().iter().enumerate() {
            if j == i {
                continue;
            }
            let mut held = 0;
            for (t, &k) in s.increments().iter().enumerate() {
                others_trade[t] += k;
                others_held[t] += held;
                held += k;
            }
        }
        Ok(Self {
            kappa,
            others_trade,
            others_held,
        })
    }
}

impl OneStepCost for TradingCost {
    fn cost(&self, step: usize, held: i64, purchase: i64) -> f64 {
        let temp = purchase * (purchase + self.others_trade[step]);
        let perm = purchase * (held + self.others_held[step]);
        temp as f64 + self.kappa * perm as f64
    }
}

/// Player `i`'s globally cost-minimizing schedule against the rest of `profile`.
pub fn best_response(
    space: &ActionSpace,
    profile: &Profile,
    i: usize,
    kappa: f64,
) -> Result<(Schedule, f64), BrError> {
    let cost = TradingCost::new(profile, i, kappa)?;
    Ok(dp::minimize(space, &cost)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrDynamicsConfig {
    /// Minimum improvement for a deviation to be accepted.
    pub epsilon: f64,
    pub max_sweeps: usize,
}

impl Default for BrDynamicsConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            max_sweeps: 10_000,
        }
    }
}

/// One accepted deviation. Sweeps and players are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    pub player: usize,
    pub old_cost: f64,
    pub new_cost: f64,
    /// Potential after the deviation.
    pub potential: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrOutcome {
    pub profile: Profile,
    pub log: Vec<SweepRecord>,
    /// Sweeps run, including the final one without deviations.
    pub sweeps: usize,
    pub initial_potential: i64,
}

/// `n(n+1)Tθ²/ε`, the deviation budget at κ = 0.
pub fn deviation_bound(spec: &GameSpec, epsilon: f64) -> f64 {
    let n = spec.n() as f64;
    let theta = spec.players().iter().map(ActionSpace::theta).max().unwrap_or(0) as f64;
    n * (n + 1.0) * spec.horizon() as f64 * theta * theta / epsilon
}

/// Sweeps players in index order, moving each to its best response whenever
/// that improves its cost by at least ε, until a sweep accepts nothing.
///
/// At κ = 0 this is a potential game and termination is guaranteed; for
/// κ > 0 the run may cycle and stops with [`BrError::NotConverged`].
pub fn run_br_dynamics(
    spec: &GameSpec,
    init: &Profile,
    cfg: &BrDynamicsConfig,
) -> Result<BrOutcome, BrError> {
    if cfg.epsilon.is_nan() || cfg.epsilon <= 0.0 || cfg.max_sweeps == 0 {
        return Err(BrError::BadConfig);
    }
    let mut profile = Profile::new(spec, init.schedules().to_vec())?;
    let kappa = spec.kappa();
    let initial_potential = profile.potential();
    let mut log = Vec::new();

    for sweep in 0..cfg.max_sweeps {
        let mut moved = false;
        for (i, space) in spec.players().iter().enumerate() {
            let old_cost = profile.total_cost(i, kappa)?;
            let (candidate, new_cost) = best_response(space, &profile, i, kappa)?;
            if new_cost <= old_cost - cfg.epsilon {
                let before = profile.potential();
                profile = profile.with_schedule(i, candidate)?;
                let potential = profile.potential();
                if kappa == 0.0 {
                    debug_assert_eq!((before - potential) as f64, old_cost - new_cost);
                }
                log.push(SweepRecord {
                    sweep,
                    player: i,
                    old_cost,
                    new_cost,
                    potential,
                });
                moved = true;
            }
        }
        if !moved {
            return Ok(BrOutcome {
                profile,
                log,
                sweeps: sweep + 1,
                initial_potential,
            });
        }
    }
    Err(BrError::NotConverged {
        sweeps: cfg.max_sweeps,
        profile,
        log,
    })
}

/// Costs observed while replaying the two-player cycling instance
/// (κ = 1, T = 5, V = 5).
#[derive(Debug, Clone, PartialEq)]
pub struct CycleReplay {
    /// `c(a2,a1), c(a2',a1), c(a1,a2'), c(a1',a2'), c(a2',a1'), c(a2'',a1')`.
    pub costs: [f64; 6],
    /// Whether the third deviation lands on player 1's starting schedule.
    pub returns_to_start: bool,
}

pub const CYCLE_COSTS: [f64; 6] = [36.0, 33.0, 35.0, 34.0, 32.0, 31.0];

pub fn cycle_fixture() -> CycleReplay {
    let space = ActionSpace::new(5, 5, 0, 5).expect("fixture space");
    let spec = GameSpec::symmetric(2, space, 1.0).expect("fixture game");
    let s = |v: [i64; 5]| Schedule::new(v.to_vec(), &space).expect("fixture schedule");
    let a1 = s([2, 2, 1, 0, 0]);
    let a2 = s([1, 1, 1, 1, 1]);
    let a2p = s([3, 1, 0, 0, 1]);
    let a1p = s([2, 1, 1, 1, 0]);
    let a2pp = s([2, 2, 1, 0, 0]);

    let cost = |p1: &Schedule, p2: &Schedule, who: usize| {
        let p = Profile::new(&spec, alloc::vec![p1.clone(), p2.clone()]).expect("fixture profile");
        p.total_cost(who, 1.0).expect("two players")
    };
    CycleReplay {
        costs: [
            cost(&a1, &a2, 1),
            cost(&a1, &a2p, 1),
            cost(&a1, &a2p, 0),
            cost(&a1p, &a2p, 0),
            cost(&a1p, &a2p, 1),
            cost(&a1p, &a2pp, 1),
        ],
        returns_to_start: a2pp == a1,
    }
}

pub fn cycle_fixture_check() -> bool {
    let replay = cycle_fixture();
    replay.costs == CYCLE_COSTS && replay.returns_to_start
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{enumerate, sample};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_step_cost_sums_to_total_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for idx in 0..1000 {
            let kappa = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 5.0, 10.0][idx % 9];
            let spec = sample::random_spec(&mut rng, 4, 6, 5, kappa);
            let p = sample::random_profile(&spec, &mut rng);
            for i in 0..spec.n() {
                let cost = TradingCost::new(&p, i, kappa).unwrap();
                let summed = dp::schedule_cost(p.schedules()[i].increments(), &cost);
                assert_eq!(summed, p.total_cost(i, kappa).unwrap());
            }
        }
    }

    #[test]
    fn best_response_to_the_cycle_opponent() {
        let space = ActionSpace::new(5, 5, 0, 5).unwrap();
        let spec = GameSpec::symmetric(2, space, 1.0).unwrap();
        let p = Profile::new(
            &spec,
            alloc::vec![
                Schedule::new(alloc::vec![2, 2, 1, 0, 0], &space).unwrap(),
                Schedule::new(alloc::vec![1, 1, 1, 1, 1], &space).unwrap(),
            ],
        )
        .unwrap();
        let (s, v) = best_response(&space, &p, 1, 1.0).unwrap();
        assert!(v <= 33.0);
        let cost = TradingCost::new(&p, 1, 1.0).unwrap();
        assert_eq!(enumerate::minimize(&space, &cost).1, v);
        assert_eq!(p.with_schedule(1, s).unwrap().total_cost(1, 1.0).unwrap(), v);
    }

    #[test]
    fn lone_player_splits_evenly() {
        let space = ActionSpace::new(10, 5, 0, 10).unwrap();
        let spec = GameSpec::symmetric(1, space, 0.0).unwrap();
        let p = spec.equal_split_profile();
        let (s, v) = best_response(&space, &p, 0, 0.0).unwrap();
        assert_eq!(v, 20.0);
        assert_eq!(s.increments(), &[2, 2, 2, 2, 2]);
    }

    #[test]
    fn best_response_never_worse_than_current() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let spec = sample::random_spec(&mut rng, 3, 5, 4, 1.5);
            let p = sample::random_profile(&spec, &mut rng);
            for (i, sp) in spec.players().iter().enumerate() {
                let (_, v) = best_response(sp, &p, i, 1.5).unwrap();
                assert!(v <= p.total_cost(i, 1.5).unwrap());
            }
        }
    }

    #[test]
    fn cycle_fixture_values() {
        let replay = cycle_fixture();
        assert_eq!(replay.costs, CYCLE_COSTS);
        assert!(replay.returns_to_start);
        assert!(cycle_fixture_check());
    }

    #[test]
    fn nash_start_is_returned_after_one_sweep() {
        let space = ActionSpace::new(10, 5, 0, 10).unwrap();
        let spec = GameSpec::symmetric(2, space, 0.0).unwrap();
        let init = spec.equal_split_profile();
        let out = run_br_dynamics(&spec, &init, &BrDynamicsConfig::default()).unwrap();
        assert_eq!(out.profile, init);
        assert_eq!(out.sweeps, 1);
        assert!(out.log.is_empty());
    }

    #[test]
    fn rejects_bad_config() {
        let space = ActionSpace::new(10, 5, 0, 10).unwrap();
        let spec = GameSpec::symmetric(2, space, 0.0).unwrap();
        let init = spec.equal_split_profile();
        let cfg = BrDynamicsConfig {
            epsilon: 0.0,
            max_sweeps: 5,
        };
        assert_eq!(run_br_dynamics(&spec, &init, &cfg), Err(BrError::BadConfig));
    }

    #[test]
    fn random_inits_decrease_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let spec = sample::random_spec(&mut rng, 4, 5, 5, 0.0);
            let init = sample::random_profile(&spec, &mut rng);
            let cfg = BrDynamicsConfig::default();
            let out = run_br_dynamics(&spec, &init, &cfg).unwrap();
            let mut prev = out.initial_potential;
            for rec in &out.log {
                assert_eq!((prev - rec.potential) as f64, rec.old_cost - rec.new_cost);
                assert!((prev - rec.potential) as f64 >= cfg.epsilon);
                prev = rec.potential;
            }
            assert!(out.log.len() as f64 <= deviation_bound(&spec, cfg.epsilon));
            for (i, sp) in spec.players().iter().enumerate() {
                let (_, best) = best_response(sp, &out.profile, i, 0.0).unwrap();
                assert!(out.profile.total_cost(i, 0.0).unwrap() - best < cfg.epsilon);
            }
        }
    }
}
