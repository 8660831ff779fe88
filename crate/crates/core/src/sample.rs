//! Random feasible schedules and profiles, for sampling-based checks.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};

use crate::game::{ActionSpace, GameSpec, Profile, Schedule};

/// Draws each purchase uniformly among the values that keep the schedule
/// completable. Not uniform over the action set, but every schedule has
/// positive probability.
pub fn random_schedule<R: Rng + ?Sized>(space: &ActionSpace, rng: &mut R) -> Schedule {
    let mut increments = Vec::with_capacity(space.horizon());
    let mut held = 0;
    for t in 0..space.horizon() {
        let (lo, hi) = space.holding_window(t + 1);
        let k_min = space.lower().max(lo - held);
        let k_max = space.upper().min(hi - held);
        let k = rng.random_range(k_min..=k_max);
        increments.push(k);
        held += k;
    }
    Schedule::from_valid(increments)
}

pub fn random_profile<R: Rng + ?Sized>(spec: &GameSpec, rng: &mut R) -> Profile {
    Profile::from_valid(
        spec.players()
            .iter()
            .map(|sp| random_schedule(sp, rng))
            .collect(),
    )
}

/// [`random_profile`] driven by a fresh generator seeded with `seed`.
pub fn seeded_profile(spec: &GameSpec, seed: u64) -> Profile {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    random_profile(spec, &mut rng)
}

/// A random game: `1..=max_players` players sharing a horizon in
/// `1..=max_horizon`, limits within `±max_theta`, and volumes of either sign.
pub fn random_spec<R: Rng + ?Sized>(
    rng: &mut R,
    max_players: usize,
    max_horizon: usize,
    max_theta: i64,
    kappa: f64,
) -> GameSpec {
    let n = rng.random_range(1..=max_players);
    let t = rng.random_range(1..=max_horizon);
    let players = (0..n)
        .map(|_| {
            let lo = rng.random_range(-max_theta..=max_theta);
            let hi = rng.random_range(lo..=max_theta);
            let v = rng.random_range(lo * t as i64..=hi * t as i64);
            ActionSpace::new(v, t, lo, hi).expect("volume drawn inside the feasible range")
        })
        .collect();
    GameSpec::new(players, kappa).expect("valid random game")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let spec = random_spec(&mut rng, 4, 6, 5, 1.0);
            let p = random_profile(&spec, &mut rng);
            assert!(Profile::new(&spec, p.schedules().to_vec()).is_ok());
        }
    }
}
