//! Random streams.
//!
//! Every simulation draws from ChaCha8, a counter-based generator: the
//! 64-bit seed fixes the key and each independent replication gets its own
//! stream number, so results do not depend on how work is spread over
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for replication `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
