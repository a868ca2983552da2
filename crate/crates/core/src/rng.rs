//! Counter-based seed derivation.
//!
//! Every randomized component draws from its own ChaCha stream derived from
//! `(master, domain, a, b)`, so adding draws in one component never shifts the
//! numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random stream families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Partition = 1,
    Init = 2,
    ClientShuffle = 3,
    Bsci = 4,
    Svm = 5,
    Data = 6,
    Poison = 7,
    Test = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives child seeds from a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    master: u64,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Seed for `(domain, a, b)`; `a`/`b` are typically client id and round.
    pub fn seed(&self, domain: Domain, a: u64, b: u64) -> u64 {
        let mut h = splitmix64(self.master);
        h = splitmix64(h ^ (domain as u64));
        h = splitmix64(h ^ a);
        splitmix64(h ^ b.rotate_left(17))
    }

    pub fn rng(&self, domain: Domain, a: u64, b: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed(domain, a, b))
    }
}

/// Shorthand for a ChaCha stream from a plain seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a seed with a tag, used by helpers that need several sub-streams.
pub fn mix(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag)
}
