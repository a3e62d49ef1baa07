//! Seeded randomness for tie-breaking.
//!
//! Each decision draws from its own stream derived from the run seed, a
//! stage tag and the node index, so results do not depend on the order in
//! which nodes are visited (or on how they are spread over threads).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::unl::NodeId;

pub(crate) const STAGE_LOCALIZE: u64 = 0x4c4f_4341;
pub(crate) const STAGE_TRANSFER: u64 = 0x5452_414e;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn rng_for(seed: u64, stage: u64, node: NodeId) -> ChaCha8Rng {
    let s = mix(seed ^ mix(stage ^ mix(u64::from(node.0))));
    ChaCha8Rng::seed_from_u64(s)
}

/// Uniform pick of an index below `n` (n > 0).
pub(crate) fn pick(seed: u64, stage: u64, node: NodeId, n: usize) -> usize {
    if n <= 1 {
        return 0;
    }
    rng_for(seed, stage, node).random_range(0..n)
}
