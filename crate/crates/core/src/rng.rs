//! Counter-based random streams for reproducible parallel trials.
//!
//! Every grid point owns a 64-bit point seed. The ChaCha8 key is the point seed expanded through
//! SplitMix64 into 256 bits, and trial `i` reads ChaCha stream `i` from block counter 0. A trial's
//! random bits therefore depend only on `(point seed, trial index)`, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// One SplitMix64 output step applied to `state`.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one grid point `(size, p_loss, p_comp)` of a sweep started from `base_seed`.
///
/// The probabilities enter through their IEEE-754 bit patterns, so the same grid point gets the
/// same seed no matter which other points share the sweep.
pub fn point_seed(base_seed: u64, size: usize, p_loss: f64, p_comp: f64) -> u64 {
    let mut h = splitmix64(base_seed);
    for word in [size as u64, p_loss.to_bits(), p_comp.to_bits()] {
        h = splitmix64(h ^ word);
    }
    h
}

/// Random stream for `trial` at a grid point seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}
