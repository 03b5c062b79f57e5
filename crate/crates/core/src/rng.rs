//! Seed derivation for independent, reproducible random streams.
//!
//! Every stochastic quantity is drawn from a ChaCha8 stream keyed by
//! `(seed, label, index)`, e.g. `(run seed, household id, draw number)`, so a
//! draw never depends on which worker computed it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn stream(seed: u64, label: &str, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(label.as_bytes()).to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..].copy_from_slice(&(label.len() as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
