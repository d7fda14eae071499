//! Seeded, splittable random streams.
//!
//! Every Monte Carlo routine takes a `u64` seed. Work is cut into fixed-size
//! chunks and chunk `k` draws from stream `k` of the master seed, so results
//! are identical no matter how many threads execute the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type Stream = ChaCha8Rng;

/// Samples per chunk in [`par_collect`].
pub const CHUNK: usize = 1024;

pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent seed for a named sub-experiment.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `f` for `n` samples in parallel and returns the results in sample order.
pub fn par_collect<T, F>(seed: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Stream) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Fallible variant of [`par_collect`]; the first error in sample order wins.
pub fn try_par_collect<T, E, F>(seed: u64, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(&mut Stream) -> Result<T, E> + Sync,
{
    par_collect(seed, n, f).into_iter().collect()
}
