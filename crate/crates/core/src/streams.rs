//! Seed derivation. Every random quantity in a scenario is drawn from its
//! own ChaCha stream so that adding a node or a policy never shifts the
//! draws seen by anything else.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const DEPLOYMENT: u64 = 0;
pub(crate) const CSI_ERROR: u64 = 1;
pub(crate) const RECEIVER_NOISE: u64 = 2;
pub(crate) const DETECTOR_NOISE: u64 = 3;
const TRAFFIC_BASE: u64 = 1 << 32;

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn traffic(seed: u64, node: usize) -> ChaCha8Rng {
    stream(seed, TRAFFIC_BASE + node as u64)
}

/// SplitMix64 finalizer, used to derive independent per-repetition seeds.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn repetition_seed(master: u64, repetition: usize) -> u64 {
    mix(master ^ mix(repetition as u64 ^ 0x5157_4950_5452_4550))
}
