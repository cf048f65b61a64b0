/// Offset added to the master seed for the validation stream.
pub const VALIDATION_SEED_OFFSET: u64 = 0x5EED_0000_0000_0001;

/// Per-sample seed: a splitmix64 finalizer over `master + golden * (index + 1)`,
/// wrapping on overflow.
///
/// ```text
/// x = master + 0x9E3779B97F4A7C15 * (index + 1)
/// z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB
/// seed = z ^ (z >> 31)
/// ```
pub fn derive_seed(master_seed: u64, sample_index: u64) -> u64 {
    let x = master_seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(sample_index.wrapping_add(1)));
    let z = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of validation sample `index`, disjoint from the training stream.
pub fn validation_seed(master_seed: u64, sample_index: u64) -> u64 {
    derive_seed(master_seed.wrapping_add(VALIDATION_SEED_OFFSET), sample_index)
}
