//! Stable seed derivation.
//!
//! Every random stream in the crate is keyed by a 64-bit seed mixed with
//! small integer coordinates (group, unit, epoch, place). The mix is a
//! SplitMix64 finaliser chain, so derived seeds do not depend on the order
//! or thread in which streams are created.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `base`, one SplitMix64 round per part.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    let mut state = mix64(base.wrapping_add(GOLDEN));
    for (i, &p) in parts.iter().enumerate() {
        let salt = (i as u64 + 1).wrapping_mul(GOLDEN);
        state = mix64(state ^ mix64(p.wrapping_add(salt)));
    }
    state
}

/// Seed of unit `unit` in patch group `group`.
pub fn unit_seed(master: u64, group: usize, unit: usize) -> u64 {
    derive(master, &[0x756e_6974, group as u64, unit as u64])
}

/// Seed of the sample shuffle for one training epoch.
pub fn epoch_seed(unit_seed: u64, epoch: usize) -> u64 {
    derive(unit_seed, &[0x6570_6f63, epoch as u64])
}
