//! Seeded, splittable random streams.
//!
//! Every stochastic routine takes an explicit `seed`; independent pieces of
//! work derive their own stream from it so results never depend on call
//! order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a parent seed with a label into a child seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keyed pseudo-random permutation of `0..len`, evaluated one index at a
/// time: a four-round Feistel network on the smallest even bit width that
/// covers `len`, with cycle walking back into range.
pub fn permute_index(key: u64, index: u64, len: u64) -> u64 {
    assert!(index < len, "index {index} outside 0..{len}");
    if len <= 1 {
        return index;
    }
    let bits = (64 - (len - 1).leading_zeros()).max(2).next_multiple_of(2);
    let half = bits / 2;
    let mask = (1u64 << half) - 1;
    let mut x = index;
    loop {
        let (mut l, mut r) = (x >> half, x & mask);
        for round in 0..4u64 {
            let f = derive_seed(key ^ round, r) & mask;
            (l, r) = (r, l ^ f);
        }
        x = (l << half) | r;
        if x < len {
            return x;
        }
    }
}
