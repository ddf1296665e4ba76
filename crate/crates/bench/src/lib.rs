//! Deterministic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stash_core::path_model::imu_sim::{simulate_recording, ImuSimConfig};
use stash_core::path_model::random_route;
use stash_core::{SensorStream, Symbol};

/// Random word over M/L/R, mostly M like real paths.
pub fn random_word(len: usize, seed: u64) -> Vec<Symbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| match rng.random_range(0..10) {
            0 | 1 => Symbol::L,
            2 | 3 => Symbol::R,
            _ => Symbol::M,
        })
        .collect()
}

/// A simulated ride of roughly `minutes` at the simulator's native rate.
pub fn ride(minutes: f64, seed: u64) -> SensorStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let legs = random_route(&mut rng, minutes);
    simulate_recording(&legs, &ImuSimConfig::default(), seed).stream
}
