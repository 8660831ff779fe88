//! Linearized Follow-the-Perturbed-Leader and its no-regret dynamics.
//!
//! A schedule `a` embeds as `f(a) ∈ R^{2T}` (purchases, then
//! `a'(t)(a'(t) + κ a(t-1))`) and the opponents as `h(a_{-i}) ∈ R^{2T}`
//! (aggregated opponent impact, then ones), so that `⟨f(a_i), h(a_{-i})⟩` is
//! exactly player `i`'s cost. The perturbed leader `argmin ⟨f(a), H + N⟩`
//! decomposes into one-step costs and is solved by the DP.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dp::{self, DpError, OneStepCost};
use crate::enumerate;
use crate::game::{ActionSpace, GameError, GameSpec, Profile, Schedule};
use crate::metrics::PlayHistory;

/// `f(a)`: first `T` entries are purchases, last `T` are
/// `a'(t)·(a'(t) + κ·a(t-1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyEmbedding(pub Vec<f64>);

/// `h(a_{-i})`: first `T` entries are `Σ_{j≠i}(a'_j(t) + κ·a_j(t-1))`, last `T`
/// are the constant 1 (or round counts once accumulated).
#[derive(Debug, Clone, PartialEq)]
pub struct CostVector(pub Vec<f64>);

pub fn embed_strategy(a: &Schedule, kappa: f64) -> StrategyEmbedding {
    let horizon = a.horizon();
    let mut out = alloc::vec![0.0; 2 * horizon];
    let mut held = 0i64;
    for (t, &k) in a.increments().iter().enumerate() {
        out[t] = k as f64;
        out[horizon + t] = k as f64 * (k as f64 + kappa * held as f64);
        held += k;
    }
    StrategyEmbedding(out)
}

pub fn cost_vector(profile: &Profile, i: usize, kappa: f64) -> Result<CostVector, GameError> {
    profile.schedule(i)?;
    let horizon = profile.horizon();
    let mut trade = alloc::vec![0i64; horizon];
    let mut held_before = alloc::vec![0i64; horizon];
    for (j, s) in profile.schedules().iter().enumerate() {
        if j == i {
            continue;
        }
        let mut held = 0;
        for (t, &k) in s.increments().iter().enumerate() {
            trade[t] += k;
            held_before[t] += held;
            held += k;
        }
    }
    let mut out = alloc::vec![1.0; 2 * horizon];
    for t in 0..horizon {
        out[t] = trade[t] as f64 + kappa * held_before[t] as f64;
    }
    Ok(CostVector(out))
}

impl StrategyEmbedding {
    pub fn dot(&self, h: &CostVector) -> f64 {
        dot(&self.0, &h.0)
    }
}

impl CostVector {
    pub fn zeros(horizon: usize) -> Self {
        Self(alloc::vec![0.0; 2 * horizon])
    }

    pub fn horizon(&self) -> usize {
        self.0.len() / 2
    }

    pub fn add_assign(&mut self, other: &CostVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn scaled(&self, factor: f64) -> CostVector {
        CostVector(self.0.iter().map(|x| x * factor).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The one-step form of `⟨f(a), coeffs⟩`:
/// `k·coeffs[t] + k·(k + κ·held)·coeffs[T+t]`.
#[derive(Debug, Clone, Copy)]
pub struct LinearCost<'a> {
    coeffs: &'a [f64],
    kappa: f64,
}

impl<'a> LinearCost<'a> {
    pub fn new(coeffs: &'a [f64], kappa: f64) -> Self {
        debug_assert!(coeffs.len().is_multiple_of(2));
        Self { coeffs, kappa }
    }
}

impl OneStepCost for LinearCost<'_> {
    fn cost(&self, step: usize, held: i64, purchase: i64) -> f64 {
        let horizon = self.coeffs.len() / 2;
        let k = purchase as f64;
        k * self.coeffs[step] + k * (k + self.kappa * held as f64) * self.coeffs[horizon + step]
    }
}

/// Solver for `argmin_{a ∈ A} Σ_t p(t, a(t-1), a'(t))`.
pub trait Oracle {
    fn minimize<C: OneStepCost + ?Sized>(
        &self,
        space: &ActionSpace,
        cost: &C,
    ) -> Result<(Schedule, f64), DpError>;
}

/// The dynamic program; the default oracle.
#[derive(Debug, Clone, Copy, Default)]
pub struct DpOracle;

impl Oracle for DpOracle {
    fn minimize<C: OneStepCost + ?Sized>(
        &self,
        space: &ActionSpace,
        cost: &C,
    ) -> Result<(Schedule, f64), DpError> {
        dp::minimize(space, cost)
    }
}

/// Exhaustive enumeration; only for tiny spaces.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnumerationOracle;

impl Oracle for EnumerationOracle {
    fn minimize<C: OneStepCost + ?Sized>(
        &self,
        space: &ActionSpace,
        cost: &C,
    ) -> Result<(Schedule, f64), DpError> {
        Ok(enumerate::minimize(space, cost))
    }
}

/// `argmin_a ⟨f(a), coeffs⟩` together with the minimum.
pub fn linear_best_response<O: Oracle>(
    oracle: &O,
    space: &ActionSpace,
    coeffs: &[f64],
    kappa: f64,
) -> Result<(Schedule, f64), DpError> {
    oracle.minimize(space, &LinearCost::new(coeffs, kappa))
}

/// One player's FTPL state: cumulative cost `H_r`, noise scale η and a private
/// generator.
#[derive(Debug, Clone)]
pub struct FtplLearner {
    cumulative: CostVector,
    eta: f64,
    rng: ChaCha8Rng,
    round: usize,
    scratch: Vec<f64>,
}

impl FtplLearner {
    pub fn new(horizon: usize, eta: f64, seed: u64) -> Self {
        assert!(eta >= 0.0 && eta.is_finite(), "eta must be finite and nonnegative");
        Self {
            cumulative: CostVector::zeros(horizon),
            eta,
            rng: ChaCha8Rng::seed_from_u64(seed),
            round: 0,
            scratch: alloc::vec![0.0; 2 * horizon],
        }
    }

    pub fn cumulative(&self) -> &CostVector {
        &self.cumulative
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Number of cost vectors observed since creation or the last reset.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Draws `N_r ~ U[0, η]^{2T}` and returns `argmin_a ⟨f(a), H_r + N_r⟩`.
    pub fn draw<O: Oracle>(
        &mut self,
        oracle: &O,
        space: &ActionSpace,
        kappa: f64,
    ) -> Result<Schedule, DpError> {
        for (slot, h) in self.scratch.iter_mut().zip(&self.cumulative.0) {
            let noise = if self.eta > 0.0 {
                self.rng.random_range(0.0..=self.eta)
            } else {
                0.0
            };
            *slot = h + noise;
        }
        Ok(linear_best_response(oracle, space, &self.scratch, kappa)?.0)
    }

    pub fn observe(&mut self, h: &CostVector) {
        self.cumulative.add_assign(h);
        self.round += 1;
    }

    /// Forgets the history; the generator keeps its position.
    pub fn reset(&mut self) {
        self.cumulative.0.iter_mut().for_each(|x| *x = 0.0);
        self.round = 0;
    }
}

/// Every player runs its own FTPL copy for `rounds` rounds with full
/// information feedback.
pub fn run_no_regret_dynamics(
    spec: &GameSpec,
    rounds: usize,
    eta: f64,
    seeds: &[u64],
) -> Result<PlayHistory, DpError> {
    run_no_regret_dynamics_with(&DpOracle, spec, rounds, eta, seeds)
}

pub fn run_no_regret_dynamics_with<O: Oracle>(
    oracle: &O,
    spec: &GameSpec,
    rounds: usize,
    eta: f64,
    seeds: &[u64],
) -> Result<PlayHistory, DpError> {
    assert_eq!(seeds.len(), spec.n(), "one seed per player");
    let kappa = spec.kappa();
    let mut learners: Vec<FtplLearner> = seeds
        .iter()
        .map(|&s| FtplLearner::new(spec.horizon(), eta, s))
        .collect();
    let mut played = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut schedules = Vec::with_capacity(spec.n());
        for (learner, space) in learners.iter_mut().zip(spec.players()) {
            schedules.push(learner.draw(oracle, space, kappa)?);
        }
        let profile = Profile::from_valid(schedules);
        for (i, learner) in learners.iter_mut().enumerate() {
            let h = cost_vector(&profile, i, kappa).expect("index in range");
            learner.observe(&h);
        }
        played.push(profile);
    }
    Ok(PlayHistory::from_valid(spec.clone(), played))
}

/// Constant-free bounds for one player's OLO instance: diameter `D` of the
/// embedded strategies (ℓ1), `M = max ‖h‖₁`, and `C = max |⟨f, h⟩|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OloBounds {
    pub diameter: f64,
    pub cost_norm: f64,
    pub max_loss: f64,
}

impl OloBounds {
    pub fn for_player(spec: &GameSpec, i: usize) -> Result<Self, GameError> {
        let own = spec.player(i)?.theta() as f64;
        let others: f64 = spec
            .players()
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, p)| p.theta() as f64)
            .sum();
        let kappa = spec.kappa();
        let (mut diameter, mut cost_norm, mut max_loss) = (0.0, 0.0, 0.0);
        for t in 0..spec.horizon() {
            let growth = 1.0 + kappa * t as f64;
            diameter += 2.0 * (own + own * own * growth);
            cost_norm += others * growth + 1.0;
            max_loss += own * others * growth + own * own * growth;
        }
        Ok(Self {
            diameter,
            cost_norm,
            max_loss,
        })
    }

    /// `η = √(2MCR/D)`.
    pub fn kalai_vempala_eta(&self, rounds: usize) -> f64 {
        libm::sqrt(2.0 * self.cost_norm * self.max_loss * rounds as f64 / self.diameter)
    }

    /// `2√(DMC/R)`, the expected average-regret guarantee at that η.
    pub fn regret_bound(&self, rounds: usize) -> f64 {
        2.0 * libm::sqrt(self.diameter * self.cost_norm * self.max_loss / rounds as f64)
    }
}

/// `η = nT√(2θR)`.
pub fn dynamics_eta(spec: &GameSpec, rounds: usize) -> f64 {
    let theta = spec.players().iter().map(ActionSpace::theta).max().unwrap_or(0) as f64;
    spec.n() as f64 * spec.horizon() as f64 * libm::sqrt(2.0 * theta * rounds as f64)
}

/// The noise scale used at desk scale.
pub const DEFAULT_ETA: f64 = 50.0;
