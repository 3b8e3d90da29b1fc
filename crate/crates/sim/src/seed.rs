//! Per-trial seed derivation.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; a bijection on `u64`.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` at sweep point `point` of a run seeded `master`.
///
/// Every stage is a bijection once the earlier inputs are fixed, so two
/// trials of the same master and point never share a seed.
pub fn derive_trial_seed(master: u64, point: u64, trial: u64) -> u64 {
    let a = mix(master.wrapping_add(GOLDEN));
    let b = mix(a ^ point.wrapping_mul(GOLDEN).wrapping_add(1));
    mix(b ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(2))
}
