//! Small deterministic hashes used for prover tables, feature hashing and
//! random-stream derivation.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `hash64(text)`: FNV-1a followed by the SplitMix64 finalizer.
pub fn hash64(text: &str) -> u64 {
    mix64(fnv1a64(text.as_bytes()))
}

/// Map a 64-bit value to `[0, 1)` using its top 53 bits.
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Seed for the stream identified by `keys` under `root`.
pub fn derive_seed(root: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix64(root), |acc, &k| mix64(acc ^ mix64(k)))
}
