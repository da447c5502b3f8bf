//! Seed handling.
//!
//! Everything random in this crate flows through ChaCha8 streams derived
//! from a single master seed: trial `t` of an experiment uses stream `t`,
//! the prediction ensemble uses a reserved high stream. Adding trials never
//! perturbs existing ones, and parallel trials are reproducible regardless
//! of scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream id reserved for the prediction ensemble (trials use `0..trials`).
pub const PREDICTION_STREAM: u64 = 1 << 63;

/// RNG for one independent trial of an experiment.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    stream_rng(master_seed, trial)
}

/// RNG for the prediction-side particle ensemble.
pub fn prediction_rng(master_seed: u64) -> ChaCha8Rng {
    stream_rng(master_seed, PREDICTION_STREAM)
}

/// ChaCha8 seeded with `master_seed`, positioned on `stream`.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}
