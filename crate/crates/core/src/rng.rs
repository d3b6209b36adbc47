//! Seeded, splittable random streams.
//!
//! Every random draw in the crate flows through [`rng_stream`]. A stream is a
//! ChaCha8 generator keyed by a 64-bit seed and positioned on a 64-bit stream
//! id, so `(seed, id)` pairs give reproducible, non-overlapping sequences.
//! Parallel code derives one stream per work *block* (never per worker), which
//! keeps results independent of the number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn rng_stream(seed: u64, stream_id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Stream in a named domain: the top 16 bits of the stream id carry the
/// domain tag, the low 48 bits the index within it.
pub fn substream(seed: u64, domain: u16, index: u64) -> Stream {
    debug_assert!(index < 1 << 48);
    rng_stream(seed, ((domain as u64) << 48) | (index & ((1 << 48) - 1)))
}

/// Number of samples handled by one stream in blocked Monte-Carlo loops.
pub const BLOCK: usize = 4096;

/// Splits `total` draws into fixed-size blocks `(block_index, len)`.
pub fn blocks(total: usize) -> Vec<(u64, usize)> {
    (0..total.div_ceil(BLOCK))
        .map(|b| (b as u64, BLOCK.min(total - b * BLOCK)))
        .collect()
}
