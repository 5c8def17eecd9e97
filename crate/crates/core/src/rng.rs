//! Seed plumbing.
//!
//! Every random stream in the crate is a ChaCha8 generator. A stream is
//! addressed by a 64-bit seed plus a 64-bit stream id, so that independent
//! substreams (one per column, tree, replicate, ...) never overlap and adding
//! a new substream leaves existing ones untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// ChaCha8 generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Incremental FNV-1a hasher finished with a SplitMix64 avalanche.
///
/// Stable across platforms and compiler versions, unlike `DefaultHasher`.
#[derive(Debug, Clone)]
pub struct SeedHasher(u64);

impl Default for SeedHasher {
    fn default() -> Self {
        SeedHasher(0xcbf2_9ce4_8422_2325)
    }
}

impl SeedHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(mut self, bytes: &[u8]) -> Self {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
        // field separator so ("ab","c") and ("a","bc") differ
        self.0 ^= 0xff;
        self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        self
    }

    pub fn str(self, s: &str) -> Self {
        self.bytes(s.as_bytes())
    }

    pub fn u64(self, v: u64) -> Self {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64(self, v: f64) -> Self {
        self.u64(v.to_bits())
    }

    pub fn finish(self) -> u64 {
        splitmix64(self.0)
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a list of integer coordinates.
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(SeedHasher::new().u64(seed), |h, &c| h.u64(c))
        .finish()
}
