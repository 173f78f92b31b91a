//! Seed derivation for independent random streams.
//!
//! Every stream is keyed by `(master seed, purpose tag, index)`. The key is
//! encoded as `"{master}/{tag}/{index}"`, hashed with SHA-256, and the first
//! eight digest bytes read little-endian become the `u64` seed of a
//! `ChaCha8Rng`. Streams with different tags never share state, so adding a
//! consumer of randomness does not shift any other stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const INIT: &str = "init";
pub const DROPOUT: &str = "dropout";
pub const SPLIT: &str = "split";
pub const SBM_EDGES: &str = "sbm-edges";
pub const SBM_FEATURES: &str = "sbm-features";

pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let digest = Sha256::digest(format!("{master}/{tag}/{index}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stream(master: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag, index))
}
