//! Splittable counter-based random keys.
//!
//! A [`Key`] is a 64-bit value. Child keys are derived by hashing the parent
//! together with a counter, so splitting is deterministic and order-free.
//! Bulk sampling inside a single operation goes through [`Key::stream`], a
//! ChaCha8 stream seeded from the key.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Key(u64);

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Key {
    pub fn new(seed: u64) -> Self {
        Key(mix(seed.wrapping_add(GOLDEN)))
    }

    pub fn from_raw(raw: u64) -> Self {
        Key(raw)
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    /// Child key number `index`.
    #[inline]
    pub fn fold_in(self, index: u64) -> Key {
        Key(mix(self.0 ^ mix(index.wrapping_mul(GOLDEN).wrapping_add(0x632b_e59b_d9b4_e019))))
    }

    /// `n` child keys in index order.
    pub fn split(self, n: usize) -> Vec<Key> {
        (0..n as u64).map(|i| self.fold_in(i)).collect()
    }

    pub fn split2(self) -> (Key, Key) {
        (self.fold_in(0), self.fold_in(1))
    }

    pub fn stream(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(self) -> f64 {
        (mix(self.0 ^ 0x5851_f42d_4c95_7f2d) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
