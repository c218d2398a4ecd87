//! Seeded, platform-independent random streams (ChaCha8).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) mod streams {
    pub const QUADRATIC_A: u64 = 1;
    pub const QUADRATIC_D: u64 = 2;
    pub const QUADRATIC_C: u64 = 3;
    pub const BILINEAR: u64 = 4;
    pub const POLYTOPE: u64 = 5;
    pub const START: u64 = 6;
    pub const BROYDEN_H0: u64 = 7;
    pub const BETA: u64 = 8;
}
