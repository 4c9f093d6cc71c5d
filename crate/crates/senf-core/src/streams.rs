//! Deterministic derivation of per-task RNG seeds from a master seed.
//!
//! Every stochastic component (simulator draws, subsample draws) derives an
//! independent stream per logical task, so adding a fuzzer, a target, or a
//! sweep size never perturbs the draws of the others, and parallel and
//! serial execution produce identical output.

/// SplitMix64 finalizer; the standard 64-bit avalanche mix.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// FNV-1a over bytes; stable across builds, used to fold labels into seeds.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xCBF29CE484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001B3);
    }
    hash
}

/// Chains the master seed with any number of parts through SplitMix64.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut acc = splitmix64(master);
    for &p in parts {
        acc = splitmix64(acc ^ p);
    }
    acc
}
