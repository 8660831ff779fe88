//! Equilibrium diagnostics over a history of joint play.
//!
//! Every expectation is taken through the linear embedding: a player's cost
//! against any mixture of opponent profiles is `⟨f(a), h̄⟩` with `h̄` the
//! averaged cost vector, so each "best fixed action against a distribution"
//! is a single DP call regardless of the support size.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::dp::DpError;
use crate::ftpl::{cost_vector, dot, embed_strategy, linear_best_response, DpOracle};
use crate::game::{GameError, GameSpec, Profile, Schedule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("history has no rounds")]
    Empty,
    #[error("metric is defined for two players, history has {0}")]
    NotTwoPlayers(usize),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Dp(#[from] DpError),
}

/// Joint action profiles played round by round.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayHistory {
    spec: GameSpec,
    rounds: Vec<Profile>,
}

impl PlayHistory {
    pub fn new(spec: GameSpec, rounds: Vec<Profile>) -> Result<Self, MetricsError> {
        if rounds.is_empty() {
            return Err(MetricsError::Empty);
        }
        for p in &rounds {
            Profile::new(&spec, p.schedules().to_vec())?;
        }
        Ok(Self { spec, rounds })
    }

    pub(crate) fn from_valid(spec: GameSpec, rounds: Vec<Profile>) -> Self {
        Self { spec, rounds }
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn rounds(&self) -> &[Profile] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// The first `len` rounds.
    pub fn prefix(&self, len: usize) -> Result<Self, MetricsError> {
        if len == 0 {
            return Err(MetricsError::Empty);
        }
        Ok(Self {
            spec: self.spec.clone(),
            rounds: self.rounds[..len.min(self.rounds.len())].to_vec(),
        })
    }

    fn check(&self) -> Result<(), MetricsError> {
        if self.rounds.is_empty() {
            Err(MetricsError::Empty)
        } else {
            Ok(())
        }
    }

    fn kappa(&self) -> f64 {
        self.spec.kappa()
    }

    /// Realized cost of player `i` in every round.
    pub fn realized_costs(&self, i: usize) -> Result<Vec<f64>, MetricsError> {
        self.rounds
            .iter()
            .map(|p| Ok(p.total_cost(i, self.kappa())?))
            .collect()
    }

    /// `min_a ⟨f(a), coeffs⟩` over player `i`'s action set.
    fn best_value(&self, i: usize, coeffs: &[f64]) -> Result<(Schedule, f64), MetricsError> {
        let space = self.spec.player(i)?;
        Ok(linear_best_response(&DpOracle, space, coeffs, self.kappa())?)
    }

    fn summed_cost_vector(&self, i: usize) -> Result<Vec<f64>, MetricsError> {
        let mut sum = alloc::vec![0.0; 2 * self.spec.horizon()];
        for p in &self.rounds {
            let h = cost_vector(p, i, self.kappa())?;
            for (a, b) in sum.iter_mut().zip(&h.0) {
                *a += b;
            }
        }
        Ok(sum)
    }

    /// Average external regret of player `i`.
    pub fn external_regret(&self, i: usize) -> Result<f64, MetricsError> {
        self.check()?;
        let realized: f64 = self.realized_costs(i)?.iter().sum();
        let (_, best) = self.best_value(i, &self.summed_cost_vector(i)?)?;
        Ok((realized - best) / self.len() as f64)
    }

    /// Average swap regret of player `i` under the optimal swap function,
    /// which remaps each played schedule to the best response against the
    /// rounds in which it was played.
    pub fn swap_regret(&self, i: usize) -> Result<f64, MetricsError> {
        self.check()?;
        let kappa = self.kappa();
        let mut groups: BTreeMap<&Schedule, (f64, Vec<f64>)> = BTreeMap::new();
        for p in &self.rounds {
            let own = p.schedule(i)?;
            let h = cost_vector(p, i, kappa)?;
            let entry = groups
                .entry(own)
                .or_insert_with(|| (0.0, alloc::vec![0.0; h.0.len()]));
            entry.0 += p.total_cost(i, kappa)?;
            for (a, b) in entry.1.iter_mut().zip(&h.0) {
                *a += b;
            }
        }
        let mut gain = 0.0;
        for (realized, summed) in groups.values() {
            let (_, best) = self.best_value(i, summed)?;
            gain += realized - best;
        }
        Ok(gain / self.len() as f64)
    }

    /// Max over players of average external regret.
    pub fn distance_to_cce(&self) -> Result<f64, MetricsError> {
        self.max_over_players(|i| self.external_regret(i))
    }

    /// Max over players of average swap regret.
    pub fn distance_to_ce(&self) -> Result<f64, MetricsError> {
        self.max_over_players(|i| self.swap_regret(i))
    }

    /// Gap of each player's expected cost under the product of marginals to
    /// its best fixed response against the others' marginals; the max over
    /// players.
    pub fn distance_to_ne(&self) -> Result<f64, MetricsError> {
        self.max_over_players(|i| self.ne_gap(i))
    }

    pub fn ne_gap(&self, i: usize) -> Result<f64, MetricsError> {
        self.check()?;
        let kappa = self.kappa();
        let dim = 2 * self.spec.horizon();
        let mut mean_f = alloc::vec![0.0; dim];
        for p in &self.rounds {
            let f = embed_strategy(p.schedule(i)?, kappa);
            for (a, b) in mean_f.iter_mut().zip(&f.0) {
                *a += b;
            }
        }
        let summed_h = self.summed_cost_vector(i)?;
        let r = self.len() as f64;
        // ⟨Σf/R, Σh/R⟩ and min ⟨f, Σh⟩/R.
        let expected = dot(&mean_f, &summed_h) / (r * r);
        let (_, best) = self.best_value(i, &summed_h)?;
        Ok(expected - best / r)
    }

    fn max_over_players<F>(&self, metric: F) -> Result<f64, MetricsError>
    where
        F: Fn(usize) -> Result<f64, MetricsError>,
    {
        self.check()?;
        let mut best = f64::NEG_INFINITY;
        for i in 0..self.spec.n() {
            best = best.max(metric(i)?);
        }
        Ok(best)
    }

    /// `Σ_{(a1,a2) ∈ supp(D)} |D(a1,a2) − D1(a1)·D2(a2)|`, summed over the
    /// joint support only and without the ½ factor.
    pub fn tv_distance(&self) -> Result<f64, MetricsError> {
        self.check()?;
        if self.spec.n() != 2 {
            return Err(MetricsError::NotTwoPlayers(self.spec.n()));
        }
        let mut joint: BTreeMap<&Profile, usize> = BTreeMap::new();
        let mut first: BTreeMap<&Schedule, usize> = BTreeMap::new();
        let mut second: BTreeMap<&Schedule, usize> = BTreeMap::new();
        for p in &self.rounds {
            *joint.entry(p).or_default() += 1;
            *first.entry(&p.schedules()[0]).or_default() += 1;
            *second.entry(&p.schedules()[1]).or_default() += 1;
        }
        let r = self.len() as f64;
        Ok(joint
            .iter()
            .map(|(p, &c)| {
                let p1 = first[&p.schedules()[0]] as f64 / r;
                let p2 = second[&p.schedules()[1]] as f64 / r;
                (c as f64 / r - p1 * p2).abs()
            })
            .sum())
    }

    /// Sum over players of expected cost under the empirical joint
    /// distribution (lower is better).
    pub fn welfare(&self) -> Result<f64, MetricsError> {
        self.check()?;
        let mut total = 0.0;
        for i in 0..self.spec.n() {
            total += self.realized_costs(i)?.iter().sum::<f64>();
        }
        Ok(total / self.len() as f64)
    }

    /// Cumulative and average external regret of player `i` after every
    /// `stride`-th round and after the last round.
    pub fn regret_curve(&self, i: usize, stride: usize) -> Result<Vec<RegretPoint>, MetricsError> {
        self.check()?;
        let stride = stride.max(1);
        let kappa = self.kappa();
        let mut summed = alloc::vec![0.0; 2 * self.spec.horizon()];
        let mut realized = 0.0;
        let mut out = Vec::new();
        for (r, p) in self.rounds.iter().enumerate() {
            let h = cost_vector(p, i, kappa)?;
            for (a, b) in summed.iter_mut().zip(&h.0) {
                *a += b;
            }
            realized += p.total_cost(i, kappa)?;
            let played = r + 1;
            if played % stride == 0 || played == self.len() {
                let (_, best) = self.best_value(i, &summed)?;
                let cumulative = realized - best;
                out.push(RegretPoint {
                    round: played,
                    cumulative,
                    average: cumulative / played as f64,
                });
            }
        }
        Ok(out)
    }

    pub fn summary(&self) -> Result<MetricsSummary, MetricsError> {
        let regrets = (0..self.spec.n())
            .map(|i| self.external_regret(i))
            .collect::<Result<Vec<_>, _>>()?;
        let swap = (0..self.spec.n())
            .map(|i| self.swap_regret(i))
            .collect::<Result<Vec<_>, _>>()?;
        let ne = (0..self.spec.n())
            .map(|i| self.ne_gap(i))
            .collect::<Result<Vec<_>, _>>()?;
        let fold = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(MetricsSummary {
            rounds: self.len(),
            dist_cce: fold(&regrets),
            dist_ce: fold(&swap),
            dist_ne: fold(&ne),
            regrets,
            tv: if self.spec.n() == 2 {
                Some(self.tv_distance()?)
            } else {
                None
            },
            welfare: self.welfare()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretPoint {
    pub round: usize,
    pub cumulative: f64,
    pub average: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub rounds: usize,
    /// Average external regret per player.
    pub regrets: Vec<f64>,
    pub dist_ne: f64,
    pub dist_ce: f64,
    pub dist_cce: f64,
    /// Only defined for two players.
    pub tv: Option<f64>,
    pub welfare: f64,
}

/// Empirical joint and marginal frequencies keyed by the canonical text
/// encoding (`"2,2,1,0,0"` per schedule, players joined by `|`).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistributions {
    pub joint: BTreeMap<String, f64>,
    pub marginals: Vec<BTreeMap<String, f64>>,
}

pub fn profile_key(p: &Profile) -> String {
    let mut key = String::new();
    for (idx, s) in p.schedules().iter().enumerate() {
        if idx > 0 {
            key.push('|');
        }
        key.push_str(&s.to_string());
    }
    key
}

impl EmpiricalDistributions {
    pub fn from_history(history: &PlayHistory) -> Result<Self, MetricsError> {
        history.check()?;
        let r = history.len() as f64;
        let mut joint: BTreeMap<String, f64> = BTreeMap::new();
        let mut marginals: Vec<BTreeMap<String, f64>> =
            alloc::vec![BTreeMap::new(); history.spec().n()];
        for p in history.rounds() {
            *joint.entry(profile_key(p)).or_default() += 1.0 / r;
            for (m, s) in marginals.iter_mut().zip(p.schedules()) {
                *m.entry(s.to_string()).or_default() += 1.0 / r;
            }
        }
        Ok(Self { joint, marginals })
    }
}
