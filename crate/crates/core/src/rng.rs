//! Reproducible random streams.
//!
//! Every random stream is ChaCha20 (the `rand_chacha` implementation, which is
//! value-stable across platforms and releases). The 256-bit key is expanded
//! from the 64-bit master seed with `SeedableRng::seed_from_u64`, and the
//! 64-bit ChaCha stream id selects an independent substream:
//!
//! ```text
//! stream = trial_index * 16 + role_tag
//! ```
//!
//! so trial `i` of a run always sees the same bits regardless of how many
//! workers execute the run or in which order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Who consumes a substream within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Alice = 0,
    Bob = 1,
    Channel = 2,
    Adversary = 3,
    Commitment = 4,
    Private = 5,
    Sampler = 6,
}

pub fn substream(master_seed: u64, trial: u64, role: Role) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(trial.wrapping_mul(16).wrapping_add(role as u64));
    rng
}

/// Returns true with probability `p`, using one 64-bit draw compared against
/// `floor(p * 2^64)`.
#[inline]
pub fn bernoulli<R: RngCore + ?Sized>(rng: &mut R, p: f64) -> bool {
    if p <= 0.0 {
        // Still consume a draw so stream positions do not depend on p.
        rng.next_u64();
        return false;
    }
    let threshold = if p >= 1.0 {
        u64::MAX
    } else {
        (p * 18_446_744_073_709_551_616.0) as u64
    };
    rng.next_u64() < threshold
}
