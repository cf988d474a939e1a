//! Independent, reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed and
//! positioned on a stream id derived from `(replicate, lane)`, so work units
//! can run in any order or in parallel without changing their draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for inside one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    Population,
    Sample,
    Chain(u32),
}

impl Lane {
    fn code(self) -> u64 {
        match self {
            Lane::Population => 0,
            Lane::Sample => 1,
            Lane::Chain(c) => 16 + u64::from(c),
        }
    }
}

const LANES_PER_REPLICATE: u64 = 1 << 20;

/// Stream for `(master seed, replicate, lane)`.
pub fn stream(master: u64, replicate: u64, lane: Lane) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(replicate * LANES_PER_REPLICATE + lane.code());
    rng
}

/// Derive a 64-bit child seed from a stream, for APIs that take a seed.
pub fn child_seed(master: u64, replicate: u64, lane: Lane) -> u64 {
    use rand::RngCore;
    stream(master, replicate, lane).next_u64()
}
