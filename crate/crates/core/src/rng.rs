//! Counter-keyed random streams.
//!
//! Every stream is a ChaCha8 generator whose seed is a hash of
//! `(master seed, replicate, level, column)`, so a draw depends only on its
//! coordinates and never on which worker produced it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream roles, mixed into the key so sample and sign streams never collide.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamRole {
    Sample,
    Sign,
    Outer,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Sample => 0x5a,
            StreamRole::Sign => 0xe5,
            StreamRole::Outer => 0x0c,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes four words into one seed.
pub fn mix(seed: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut h = splitmix64(seed);
    for w in [a, b, c] {
        h = splitmix64(h ^ w);
    }
    h
}

/// The stream for `(rep, level, column)` under `seed`.
pub fn stream(seed: u64, role: StreamRole, rep: u64, level: u64, column: u64) -> ChaCha8Rng {
    let key = mix(seed ^ role.tag().rotate_left(56), rep, level, column);
    ChaCha8Rng::seed_from_u64(key)
}
