//! Deterministic seed derivation.

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `player` in `run`, independent of how many players exist.
pub fn player_seed(base: u64, run: u64, player: u64) -> u64 {
    mix64(mix64(mix64(base) ^ run) ^ player)
}

/// A child stream of `seed` labelled by `tag`.
pub fn derive(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag.wrapping_add(0xA076_1D64_78BD_642F)))
}
