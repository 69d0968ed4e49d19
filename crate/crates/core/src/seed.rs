//! Deterministic random streams.
//!
//! Replication `r` of an experiment with master seed `s` uses
//!
//! ```text
//! seed_r = splitmix64(s ^ splitmix64(r + 1))
//! splitmix64(x): z = x + 0x9E3779B97F4A7C15
//!                z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!                z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!                return z ^ (z >> 31)
//! ```
//!
//! (wrapping arithmetic), and the stream itself is ChaCha20 seeded through
//! `SeedableRng::seed_from_u64(seed_r)`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replication_seed(master: u64, replication: u64) -> u64 {
    splitmix64(master ^ splitmix64(replication.wrapping_add(1)))
}

pub fn stream_rng(seed: u64) -> StreamRng {
    ChaCha20Rng::seed_from_u64(seed)
}
