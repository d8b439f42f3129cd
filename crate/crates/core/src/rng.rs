//! Deterministic random streams.
//!
//! Every consumer of randomness receives a [`Stream`]: a 64-bit key derived
//! from the master seed by hashing a path of labels (scenario id,
//! replication index, purpose tag, ...). Keys never depend on execution
//! order, so a task produces the same draws whichever worker runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator behind every stream.
pub type StreamRng = ChaCha8Rng;

/// A node in the seed-derivation tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream {
    key: u64,
}

impl Stream {
    pub fn new(master_seed: u64) -> Self {
        Stream {
            key: splitmix64(master_seed ^ 0x5049_5445_5345_4544),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Child stream keyed on a numeric label.
    pub fn child(&self, label: u64) -> Self {
        Stream {
            key: splitmix64(self.key.rotate_left(17) ^ splitmix64(label)),
        }
    }

    /// Child stream keyed on a purpose tag.
    pub fn tagged(&self, tag: &str) -> Self {
        self.child(fnv1a(tag.as_bytes()))
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a, used to turn tags and scenario descriptors into labels.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}
