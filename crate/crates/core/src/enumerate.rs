//! Exhaustive reference solver over small action spaces.
//!
//! Used as the independent oracle for the DP and anywhere a metric needs a
//! brute-force cross-check. Exponential in `T`; keep instances tiny.

use alloc::vec::Vec;

use crate::dp::{schedule_cost, OneStepCost};
use crate::game::{ActionSpace, Schedule};

/// All feasible schedules in lexicographic order of increments.
pub fn schedules(space: &ActionSpace) -> Vec<Schedule> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(space.horizon());
    extend(space, &mut current, 0, &mut out);
    out
}

fn extend(space: &ActionSpace, current: &mut Vec<i64>, held: i64, out: &mut Vec<Schedule>) {
    let t = current.len();
    if t == space.horizon() {
        out.push(Schedule::from_valid(current.clone()));
        return;
    }
    let (lo, hi) = space.holding_window(t + 1);
    for k in space.lower()..=space.upper() {
        if held + k < lo || held + k > hi {
            continue;
        }
        current.push(k);
        extend(space, current, held + k, out);
        current.pop();
    }
}

/// First strict minimizer in lexicographic order.
pub fn minimize<C: OneStepCost + ?Sized>(space: &ActionSpace, cost: &C) -> (Schedule, f64) {
    let mut best: Option<(Schedule, f64)> = None;
    for s in schedules(space) {
        let value = schedule_cost(s.increments(), cost);
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((s, value));
        }
    }
    best.expect("action space is nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_small_spaces() {
        // Compositions of 5 into 5 parts in [0, 5].
        let sp = ActionSpace::new(5, 5, 0, 5).unwrap();
        assert_eq!(schedules(&sp).len(), 126);
        let sp = ActionSpace::new(0, 2, -1, 1).unwrap();
        assert_eq!(schedules(&sp).len(), 3);
        assert!(schedules(&sp).iter().all(|s| s.fits(&sp)));
    }
}
