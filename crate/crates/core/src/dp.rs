//! Dynamic program over one-step-decomposable schedule costs.
//!
//! Minimizes `Σ_t p^t(a(t-1), a'(t))` over `A(V, θ_L, θ_U)` by backward
//! induction on `(step, holdings)`. Best response, the perturbed FTPL oracle
//! and every "min over pure actions" in the metrics route through here.
//!
//! Steps are 0-based: `p(t, held, k)` is the cost of buying `k` shares at step
//! `t` while holding `held = a(t)` shares from the first `t` steps.

use alloc::vec::Vec;

use thiserror::Error;

use crate::game::{ActionSpace, Schedule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DpError {
    #[error("prefix of {got} steps exceeds horizon {horizon}")]
    PrefixTooLong { got: usize, horizon: usize },
    #[error("prefix cannot be completed to a feasible schedule")]
    InfeasiblePrefix,
}

/// Cost of buying `purchase` shares at `step` while holding `held`.
///
/// Must be deterministic for the duration of one DP call.
pub trait OneStepCost {
    fn cost(&self, step: usize, held: i64, purchase: i64) -> f64;
}

impl<F> OneStepCost for F
where
    F: Fn(usize, i64, i64) -> f64,
{
    fn cost(&self, step: usize, held: i64, purchase: i64) -> f64 {
        self(step, held, purchase)
    }
}

/// Evaluates a full schedule under a one-step cost, accumulating from the last
/// step backwards (the same order the DP uses).
pub fn schedule_cost<C: OneStepCost + ?Sized>(schedule: &[i64], cost: &C) -> f64 {
    let mut held = Vec::with_capacity(schedule.len());
    let mut h = 0;
    for &k in schedule {
        held.push(h);
        h += k;
    }
    let mut total = 0.0;
    for t in (0..schedule.len()).rev() {
        total += cost.cost(t, held[t], schedule[t]);
    }
    total
}

/// OPT and BR tables, indexed by step and holdings.
#[derive(Debug, Clone)]
pub struct DpTables {
    volume: i64,
    windows: Vec<(i64, i64)>,
    opt: Vec<Vec<Option<f64>>>,
    choice: Vec<Vec<i64>>,
}

impl DpTables {
    pub fn horizon(&self) -> usize {
        self.windows.len() - 1
    }

    /// Reachable-and-completable holdings before `step`.
    pub fn window(&self, step: usize) -> (i64, i64) {
        self.windows[step]
    }

    /// Minimum cost from `step` onward when holding `held`, or `None` if no
    /// feasible completion exists.
    pub fn opt_held(&self, step: usize, held: i64) -> Option<f64> {
        let (lo, hi) = self.windows[step];
        if held < lo || held > hi {
            return None;
        }
        self.opt[step][(held - lo) as usize]
    }

    /// Same as [`opt_held`](Self::opt_held) keyed by shares still to buy.
    pub fn opt(&self, step: usize, remaining: i64) -> Option<f64> {
        self.opt_held(step, self.volume - remaining)
    }

    /// Minimizing purchase at `(step, held)`; only meaningful where
    /// [`opt_held`](Self::opt_held) is `Some`.
    pub fn best_purchase(&self, step: usize, held: i64) -> Option<i64> {
        self.opt_held(step, held)?;
        let lo = self.windows[step].0;
        Some(self.choice[step][(held - lo) as usize])
    }
}

#[derive(Debug, Clone)]
pub struct DpSolution {
    pub schedule: Schedule,
    pub value: f64,
    pub tables: DpTables,
    /// Number of one-step cost evaluations performed.
    pub evaluations: usize,
}

/// Returns a minimizing schedule and its cost.
pub fn minimize<C: OneStepCost + ?Sized>(
    space: &ActionSpace,
    cost: &C,
) -> Result<(Schedule, f64), DpError> {
    let sol = solve_restricted(space, cost, &[])?;
    Ok((sol.schedule, sol.value))
}

/// Optimal completion of a fixed prefix of purchases.
pub fn minimize_conditioned<C: OneStepCost + ?Sized>(
    space: &ActionSpace,
    cost: &C,
    prefix: &[i64],
) -> Result<(Schedule, f64), DpError> {
    let sol = solve_restricted(space, cost, prefix)?;
    Ok((sol.schedule, sol.value))
}

/// Like [`minimize`] but keeps the tables and the evaluation count.
pub fn solve<C: OneStepCost + ?Sized>(
    space: &ActionSpace,
    cost: &C,
) -> Result<DpSolution, DpError> {
    solve_restricted(space, cost, &[])
}

fn solve_restricted<C: OneStepCost + ?Sized>(
    space: &ActionSpace,
    cost: &C,
    prefix: &[i64],
) -> Result<DpSolution, DpError> {
    let horizon = space.horizon();
    if prefix.len() > horizon {
        return Err(DpError::PrefixTooLong {
            got: prefix.len(),
            horizon,
        });
    }
    let (lower, upper) = (space.lower(), space.upper());
    if prefix.iter().any(|&k| k < lower || k > upper) {
        return Err(DpError::InfeasiblePrefix);
    }
    let windows: Vec<(i64, i64)> = (0..=horizon).map(|t| space.holding_window(t)).collect();

    let mut opt: Vec<Vec<Option<f64>>> = windows
        .iter()
        .map(|&(lo, hi)| alloc::vec![None; (hi - lo + 1).max(0) as usize])
        .collect();
    let mut choice: Vec<Vec<i64>> = opt.iter().map(|row| alloc::vec![0; row.len()]).collect();
    opt[horizon][0] = Some(0.0);

    let mut evaluations = 0;
    for t in (0..horizon).rev() {
        let (lo, hi) = windows[t];
        let (next_lo, next_hi) = windows[t + 1];
        let (k_lo, k_hi) = match prefix.get(t) {
            Some(&k) => (k, k),
            None => (lower, upper),
        };
        for held in lo..=hi {
            // Clamp k so that held + k stays inside the next window.
            let k_min = k_lo.max(next_lo - held);
            let k_max = k_hi.min(next_hi - held);
            let mut best: Option<(f64, i64)> = None;
            for k in k_min..=k_max {
                let Some(tail) = opt[t + 1][(held + k - next_lo) as usize] else {
                    continue;
                };
                evaluations += 1;
                let value = tail + cost.cost(t, held, k);
                if best.is_none_or(|(b, _)| value < b) {
                    best = Some((value, k));
                }
            }
            if let Some((value, k)) = best {
                let idx = (held - lo) as usize;
                opt[t][idx] = Some(value);
                choice[t][idx] = k;
            }
        }
    }

    let tables = DpTables {
        volume: space.volume(),
        windows,
        opt,
        choice,
    };
    let value = tables.opt_held(0, 0).ok_or(DpError::InfeasiblePrefix)?;
    let mut increments = Vec::with_capacity(horizon);
    let mut held = 0;
    for t in 0..horizon {
        let k = tables
            .best_purchase(t, held)
            .expect("optimal path stays on feasible states");
        increments.push(k);
        held += k;
    }
    Ok(DpSolution {
        schedule: Schedule::from_valid(increments),
        value,
        tables,
        evaluations,
    })
}
