//! Reproducible random streams: stream `i` of master seed `s` is the same
//! regardless of how many other streams exist or in which order they run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
