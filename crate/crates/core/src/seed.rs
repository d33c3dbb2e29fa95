//! Named, reproducible random streams.
//!
//! Every consumer of randomness asks for a stream by `(root seed, label,
//! index)`. The stream seed is the first 8 bytes (little-endian) of
//! `SHA-256(root_le || label || 0x00 || index_le)`, fed to ChaCha8. Streams
//! never depend on thread scheduling or on how many other streams were drawn.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Identifier recorded in model files for the generator above.
pub const RNG_ID: &str = "chacha8-sha256";

pub fn derive_seed(root: u64, label: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(label.as_bytes());
    h.update([0u8]);
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

pub fn stream(root: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, label, index))
}
