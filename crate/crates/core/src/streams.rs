//! Named random streams for reproducible, group-isolated sampling.
//!
//! Every (rollout, group) pair gets its own ChaCha stream: the cipher key
//! comes from the master seed and the 64-bit stream counter encodes
//! `rollout_index * 4 + group ordinal`. Streams with the same key but
//! different counters never overlap, so one group's draws cannot shift
//! another group's, no matter how many values each consumes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::predictors::GroupTag;

/// The generator backing every sampling contract in this crate. Pinned to a
/// concrete algorithm so that "same seed, same output" holds bit-for-bit.
pub type StreamRng = ChaCha8Rng;

/// Stream counters advance in strides of 4: three groups plus one slot
/// reserved for auxiliary draws.
const GROUP_STRIDE: u64 = 4;

/// Derive the random stream feeding one group of one rollout.
pub fn group_stream(master_seed: u64, rollout_index: u64, group: GroupTag) -> StreamRng {
    let ordinal = match group {
        GroupTag::AdvModel => 0,
        GroupTag::WorldPModel => 1,
        GroupTag::WorldOModel => 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(
        rollout_index
            .checked_mul(GROUP_STRIDE)
            .expect("rollout index out of range")
            + ordinal,
    );
    rng
}
