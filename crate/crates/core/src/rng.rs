//! Named random streams split from one root seed.
//!
//! Each component draws from its own stream. How much randomness one
//! component consumes never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub const CORPUS: &str = "corpus";
pub const TRANSFORM: &str = "transform";
pub const REPLAY: &str = "replay";
pub const INIT: &str = "init";
pub const SHUFFLE: &str = "shuffle";

pub fn stream(root: u64, name: &str, path: &[u64]) -> StreamRng {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update((name.len() as u64).to_le_bytes());
    h.update(name.as_bytes());
    for p in path {
        h.update(p.to_le_bytes());
    }
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(seed)
}

/// Stable 64-bit FNV-1a hash, used to key per-item streams and OOV buckets.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// `ceil(frac * n)` robust to representation error in `frac`.
pub fn fraction_count(frac: f64, n: usize) -> usize {
    let x = frac * n as f64;
    let c = (x - 1e-9).ceil();
    (c.max(0.0) as usize).min(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_independent_and_stable() {
        let a: u64 = stream(7, CORPUS, &[]).gen();
        let b: u64 = stream(7, CORPUS, &[]).gen();
        let c: u64 = stream(7, REPLAY, &[]).gen();
        let d: u64 = stream(7, REPLAY, &[1]).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(c, d);
    }

    #[test]
    fn fraction_counts() {
        assert_eq!(fraction_count(0.1, 10), 1);
        assert_eq!(fraction_count(0.1, 180), 18);
        assert_eq!(fraction_count(0.1, 200), 20);
        assert_eq!(fraction_count(0.1, 7), 1);
        assert_eq!(fraction_count(0.0, 7), 0);
        assert_eq!(fraction_count(1.0 / 3.0, 3), 1);
        assert_eq!(fraction_count(1.0, 5), 5);
    }
}
