//! Fixtures shared by the benchmarks.

use projlab_core::{gallery::random_chain, ChainModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Dense random chain with `size` states.
pub fn fixture(size: usize) -> ChainModel {
    let mut rng = ChaCha8Rng::seed_from_u64(size as u64);
    random_chain(&mut rng, size, 0.3).expect("random chain")
}
