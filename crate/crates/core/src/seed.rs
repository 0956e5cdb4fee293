//! Seed derivation for independent random streams.
//!
//! Parallel work items (trees, grid candidates, bootstrap resamples) each get
//! their own generator seeded from `(root, stream, index)`, so results do not
//! depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tags keep e.g. tree 3 and resample 3 from sharing a seed.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    Folds = 2,
    Candidate = 3,
    Tree = 4,
    Bootstrap = 5,
    Svm = 6,
}

pub fn derive_seed(root: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ splitmix64(stream as u64)) ^ index)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(root: u64, stream: Stream, index: u64) -> Rng {
    rng(derive_seed(root, stream, index))
}
