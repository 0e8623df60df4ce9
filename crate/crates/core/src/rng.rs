//! Counter-based random substreams.
//!
//! Every Monte Carlo trial `i` of an experiment seeded with `seed` draws from its own
//! ChaCha8 stream `(seed, i)`. A trial's randomness therefore depends only on its index,
//! and any partition of the index range across threads yields the same samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Default seed used by the command line and the experiment helpers.
pub const DEFAULT_SEED: u64 = 0x5EED_CA95;

/// Number of trials evaluated sequentially inside one parallel work item.
pub const CHUNK: u64 = 1 << 12;

/// Generator for trial `index` of the experiment seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `per_chunk` over `[0, n)` split into fixed chunks of [`CHUNK`] indices and returns
/// the chunk results in index order. The chunk boundaries do not depend on the thread
/// pool, so folding the returned vector sequentially is bit-reproducible.
pub fn map_chunks<T, F>(n: u64, per_chunk: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            per_chunk(start..(start + CHUNK).min(n))
        })
        .collect()
}
