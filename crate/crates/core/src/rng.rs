//! Seeded random streams.
//!
//! Every episode draws from its own ChaCha stream addressed by
//! `(seed, domain, index)`, so the order in which episodes are executed
//! never changes their content.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type EpisodeRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Init = 1,
    Train = 2,
    Eval = 3,
    Probe = 4,
    Histogram = 5,
    Session = 6,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> EpisodeRng {
    debug_assert!(index < 1 << 56);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | index);
    rng
}
