//! Seeded, splittable random streams.
//!
//! Every shot `i` of an experiment draws from its own ChaCha stream keyed by
//! `(master seed, i)`, so results do not depend on the order in which shots
//! run or on how they are spread over threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type ShotRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for shot `index`.
    pub fn rng(&self, index: u64) -> ShotRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// An independent child stream, e.g. one per experiment in a sweep.
    pub fn split(&self, label: u64) -> SeedStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        rng.set_stream(label);
        SeedStream {
            seed: rng.next_u64(),
        }
    }
}

/// Runs `f(shot_index, rng)` for every shot and returns the results in shot
/// order. With `parallel` set (and the `parallel` feature enabled) shots are
/// fanned out over the rayon pool; the output is identical either way.
pub fn run_shots<T, F>(stream: SeedStream, shots: u64, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ShotRng) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..shots)
            .into_par_iter()
            .map(|i| f(i, &mut stream.rng(i)))
            .collect();
    }
    let _ = parallel;
    (0..shots).map(|i| f(i, &mut stream.rng(i))).collect()
}
