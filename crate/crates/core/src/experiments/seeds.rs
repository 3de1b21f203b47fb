use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Child seed for `cell` under a master seed: first word of ChaCha stream `cell`.
///
/// Depends only on `(master, cell)`, so results do not depend on scheduling order.
pub fn child_seed(master: u64, cell: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(cell);
    rng.next_u64()
}

/// Offset separating input-signal seeds from reservoir seeds.
pub(crate) const SIGNAL_STREAM: u64 = 1 << 32;
