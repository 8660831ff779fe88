//! Domain types and the exact cost model.
//!
//! Schedules are stored as per-step purchases `a'(t)`; holdings `a(t)` are
//! prefix sums with `a(0) = 0`. All cost kernels accumulate in `i64` and only
//! meet `κ` at the final multiply, so the identities between the cost terms
//! can be checked exactly.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("empty action space: need {lower}*{horizon} <= {volume} <= {upper}*{horizon}")]
    EmptySpace {
        volume: i64,
        horizon: usize,
        lower: i64,
        upper: i64,
    },
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("lower limit {lower} exceeds upper limit {upper}")]
    InvertedLimits { lower: i64, upper: i64 },
    #[error("schedule has {got} steps, expected {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("purchase {value} at step {step} outside [{lower}, {upper}]")]
    OutOfLimits {
        step: usize,
        value: i64,
        lower: i64,
        upper: i64,
    },
    #[error("schedule ends at {got} shares, expected {expected}")]
    WrongVolume { got: i64, expected: i64 },
    #[error("game needs at least one player")]
    NoPlayers,
    #[error("players disagree on the horizon ({first} vs {other})")]
    MixedHorizon { first: usize, other: usize },
    #[error("kappa must be finite and nonnegative, got {0}")]
    BadKappa(f64),
    #[error("profile has {got} schedules for {expected} players")]
    ProfileSize { got: usize, expected: usize },
    #[error("player index {index} out of range for {players} players")]
    PlayerIndex { index: usize, players: usize },
    #[error("cannot parse schedule {0:?}")]
    Parse(String),
}

/// The constraint set `A(V, θ_L, θ_U)` over a horizon of `T` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionSpace {
    volume: i64,
    horizon: usize,
    lower: i64,
    upper: i64,
}

impl ActionSpace {
    pub fn new(volume: i64, horizon: usize, lower: i64, upper: i64) -> Result<Self, GameError> {
        if horizon == 0 {
            return Err(GameError::ZeroHorizon);
        }
        if lower > upper {
            return Err(GameError::InvertedLimits { lower, upper });
        }
        let t = horizon as i64;
        if lower * t > volume || volume > upper * t {
            return Err(GameError::EmptySpace {
                volume,
                horizon,
                lower,
                upper,
            });
        }
        Ok(Self {
            volume,
            horizon,
            lower,
            upper,
        })
    }

    pub fn volume(&self) -> i64 {
        self.volume
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn lower(&self) -> i64 {
        self.lower
    }

    pub fn upper(&self) -> i64 {
        self.upper
    }

    /// `θ = max(|θ_L|, |θ_U|)`.
    pub fn theta(&self) -> i64 {
        self.lower.abs().max(self.upper.abs())
    }

    /// Range of holdings `a(t)` that is both reachable after `t` steps and
    /// completable to `V` in the remaining `T - t` steps.
    pub fn holding_window(&self, t: usize) -> (i64, i64) {
        let done = t as i64;
        let left = (self.horizon - t) as i64;
        let lo = (self.lower * done).max(self.volume - self.upper * left);
        let hi = (self.upper * done).min(self.volume - self.lower * left);
        (lo, hi)
    }

    /// Splits `V` as evenly as possible, with the remainder pushed onto the
    /// final steps.
    pub fn equal_split(&self) -> Schedule {
        let t = self.horizon as i64;
        let base = self.volume.div_euclid(t);
        let extra = self.volume.rem_euclid(t) as usize;
        let mut increments = alloc::vec![base; self.horizon];
        for k in increments.iter_mut().rev().take(extra) {
            *k += 1;
        }
        Schedule { increments }
    }

    pub fn validate(&self, increments: &[i64]) -> Result<(), GameError> {
        if increments.len() != self.horizon {
            return Err(GameError::WrongLength {
                got: increments.len(),
                expected: self.horizon,
            });
        }
        for (step, &value) in increments.iter().enumerate() {
            if value < self.lower || value > self.upper {
                return Err(GameError::OutOfLimits {
                    step,
                    value,
                    lower: self.lower,
                    upper: self.upper,
                });
            }
        }
        let total: i64 = increments.iter().sum();
        if total != self.volume {
            return Err(GameError::WrongVolume {
                got: total,
                expected: self.volume,
            });
        }
        Ok(())
    }
}

/// One player's trading plan as per-step purchases (negative = sale).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Schedule {
    increments: Vec<i64>,
}

impl Schedule {
    pub fn new(increments: Vec<i64>, space: &ActionSpace) -> Result<Self, GameError> {
        space.validate(&increments)?;
        Ok(Self { increments })
    }

    /// Parses the canonical text encoding (`"2,2,1,0,0"`) and validates it.
    pub fn parse(text: &str, space: &ActionSpace) -> Result<Self, GameError> {
        Self::new(parse_increments(text)?, space)
    }

    pub(crate) fn from_valid(increments: Vec<i64>) -> Self {
        Self { increments }
    }

    pub fn increments(&self) -> &[i64] {
        &self.increments
    }

    pub fn horizon(&self) -> usize {
        self.increments.len()
    }

    pub fn volume(&self) -> i64 {
        self.increments.iter().sum()
    }

    /// Holdings `a(0), a(1), …, a(T)`; length `T + 1`.
    pub fn holdings(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut held = 0;
        out.push(held);
        for k in &self.increments {
            held += k;
            out.push(held);
        }
        out
    }

    pub fn fits(&self, space: &ActionSpace) -> bool {
        space.validate(&self.increments).is_ok()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, k) in self.increments.iter().enumerate() {
            if idx > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

/// Parses comma-separated increments without checking any action space.
pub fn parse_increments(text: &str) -> Result<Vec<i64>, GameError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(GameError::Parse(String::from(text)));
    }
    text.split(',')
        .map(|part| i64::from_str(part.trim()).map_err(|_| GameError::Parse(String::from(text))))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    players: Vec<ActionSpace>,
    kappa: f64,
}

impl GameSpec {
    pub fn new(players: Vec<ActionSpace>, kappa: f64) -> Result<Self, GameError> {
        let first = players.first().ok_or(GameError::NoPlayers)?.horizon;
        if let Some(other) = players.iter().map(|p| p.horizon).find(|&h| h != first) {
            return Err(GameError::MixedHorizon { first, other });
        }
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(GameError::BadKappa(kappa));
        }
        Ok(Self { players, kappa })
    }

    /// Every player shares the same action space.
    pub fn symmetric(n: usize, space: ActionSpace, kappa: f64) -> Result<Self, GameError> {
        Self::new(alloc::vec![space; n], kappa)
    }

    pub fn players(&self) -> &[ActionSpace] {
        &self.players
    }

    pub fn player(&self, i: usize) -> Result<&ActionSpace, GameError> {
        self.players.get(i).ok_or(GameError::PlayerIndex {
            index: i,
            players: self.players.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.players.len()
    }

    pub fn horizon(&self) -> usize {
        self.players[0].horizon
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self, GameError> {
        Self::new(self.players.clone(), kappa)
    }

    /// The profile where every player splits evenly.
    pub fn equal_split_profile(&self) -> Profile {
        Profile {
            schedules: self.players.iter().map(ActionSpace::equal_split).collect(),
        }
    }
}

/// A joint action, one schedule per player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile {
    schedules: Vec<Schedule>,
}

/// `κ = num / den` for exact-arithmetic checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactKappa {
    pub num: i64,
    pub den: i64,
}

impl ExactKappa {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den > 0 && num >= 0, "kappa must be a nonnegative ratio");
        Self { num, den }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// The three integer cost terms for one player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CostParts {
    pub temp: i64,
    pub perm: i64,
    /// Twice the averaged permanent cost, which is always an integer.
    pub perm_mean_twice: i64,
}

impl CostParts {
    pub fn total(&self, kappa: f64) -> f64 {
        self.temp as f64 + kappa * self.perm as f64
    }

    pub fn perm_mean(&self) -> f64 {
        self.perm_mean_twice as f64 / 2.0
    }

    /// `den · c` in exact arithmetic.
    pub fn scaled_total(&self, kappa: ExactKappa) -> i128 {
        kappa.den as i128 * self.temp as i128 + kappa.num as i128 * self.perm as i128
    }

    /// Exact residual of `c = (1 - κ/2)·c_temp + κ·c̄_perm`, scaled by `2·den`.
    pub fn scaled_decomposition_residual(&self, kappa: ExactKappa) -> i128 {
        let (p, q) = (kappa.num as i128, kappa.den as i128);
        let lhs = 2 * self.scaled_total(kappa);
        let rhs = (2 * q - p) * self.temp as i128 + p * self.perm_mean_twice as i128;
        lhs - rhs
    }
}

impl Profile {
    pub fn new(spec: &GameSpec, schedules: Vec<Schedule>) -> Result<Self, GameError> {
        if schedules.len() != spec.n() {
            return Err(GameError::ProfileSize {
                got: schedules.len(),
                expected: spec.n(),
            });
        }
        for (space, s) in spec.players.iter().zip(&schedules) {
            space.validate(&s.increments)?;
        }
        Ok(Self { schedules })
    }

    pub(crate) fn from_valid(schedules: Vec<Schedule>) -> Self {
        Self { schedules }
    }

    pub fn schedules(&self) -> &[Schedule] {
        &self.schedules
    }

    pub fn schedule(&self, i: usize) -> Result<&Schedule, GameError> {
        self.schedules.get(i).ok_or(GameError::PlayerIndex {
            index: i,
            players: self.schedules.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.schedules.len()
    }

    pub fn horizon(&self) -> usize {
        self.schedules[0].horizon()
    }

    /// Replaces player `i`'s schedule.
    pub fn with_schedule(&self, i: usize, schedule: Schedule) -> Result<Self, GameError> {
        self.schedule(i)?;
        let mut schedules = self.schedules.clone();
        schedules[i] = schedule;
        Ok(Self { schedules })
    }

    /// Total shares traded by all players at each step.
    pub fn step_volume(&self) -> Vec<i64> {
        let mut out = alloc::vec![0; self.horizon()];
        for s in &self.schedules {
            for (acc, k) in out.iter_mut().zip(&s.increments) {
                *acc += k;
            }
        }
        out
    }

    /// Sum over players of `a_j(t)` for `t = 0..=T`.
    pub fn aggregate_holdings(&self) -> Vec<i64> {
        let mut out = alloc::vec![0; self.horizon() + 1];
        for s in &self.schedules {
            for (acc, h) in out.iter_mut().zip(s.holdings()) {
                *acc += h;
            }
        }
        out
    }

    pub fn cost_parts(&self, i: usize) -> Result<CostParts, GameError> {
        let own = self.schedule(i)?;
        let volume = self.step_volume();
        let held = self.aggregate_holdings();
        let mut parts = CostParts::default();
        for (t, &k) in own.increments.iter().enumerate() {
            parts.temp += k * volume[t];
            parts.perm += k * held[t];
            parts.perm_mean_twice += k * (held[t] + held[t + 1]);
        }
        Ok(parts)
    }

    /// `Σ_t a'_i(t) Σ_j a'_j(t)`.
    pub fn temp_cost(&self, i: usize) -> Result<i64, GameError> {
        Ok(self.cost_parts(i)?.temp)
    }

    /// `Σ_t a'_i(t) Σ_j a_j(t-1)`.
    pub fn perm_cost(&self, i: usize) -> Result<i64, GameError> {
        Ok(self.cost_parts(i)?.perm)
    }

    /// `½ Σ_t a'_i(t) Σ_j (a_j(t-1) + a_j(t))`.
    pub fn perm_mean_cost(&self, i: usize) -> Result<f64, GameError> {
        Ok(self.cost_parts(i)?.perm_mean())
    }

    pub fn total_cost(&self, i: usize, kappa: f64) -> Result<f64, GameError> {
        Ok(self.cost_parts(i)?.total(kappa))
    }

    /// `φ(a) = Σ_t Σ_i a'_i(t) Σ_{j≥i} a'_j(t)`.
    pub fn potential(&self) -> i64 {
        let mut phi = 0;
        for t in 0..self.horizon() {
            let mut suffix = 0;
            for s in self.schedules.iter().rev() {
                let k = s.increments[t];
                suffix += k;
                phi += k * suffix;
            }
        }
        phi
    }

    /// `|c − ((1 − κ/2)·c_temp + κ·c̄_perm)|` in floating point.
    pub fn decomposition_check(&self, i: usize, kappa: f64) -> Result<f64, GameError> {
        let parts = self.cost_parts(i)?;
        let rhs = (1.0 - kappa / 2.0) * parts.temp as f64 + kappa * parts.perm_mean();
        Ok((parts.total(kappa) - rhs).abs())
    }
}
