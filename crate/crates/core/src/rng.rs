//! Seeded, splittable random streams.
//!
//! Every stochastic operation takes an explicit seed. Independent consumers of
//! the same seed draw from distinct ChaCha streams so that, for example, the
//! noise realisation does not shift when the trajectory length changes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream identifiers used inside the crate.
pub mod stream {
    pub const SCATTERERS: u64 = 1;
    pub const AP_PHASE: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const SPLIT: u64 = 4;
    pub const INIT: u64 = 5;
    pub const BATCHES: u64 = 6;
    pub const TRIPLETS: u64 = 7;
    pub const LABELS: u64 = 8;
}

/// Deterministic generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
