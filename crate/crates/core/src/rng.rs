//! Counter-based random streams.
//!
//! Every random decision in the crate is addressed by a `(seed, counter)`
//! pair and evaluated through a stateless mixing function, so results never
//! depend on traversal order or on the number of worker threads. Samplers
//! that need long streams get a ChaCha generator keyed by a derived seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of `seed` and an ordered list of tags; distinct tag lists give
/// statistically independent seeds.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    for &t in tags {
        h = mix64(h ^ mix64(t.wrapping_add(GOLDEN).wrapping_mul(GOLDEN)));
    }
    h
}

/// The `counter`-th 64-bit word of the stream keyed by `seed`.
#[inline]
pub fn word(seed: u64, counter: u64) -> u64 {
    mix64(mix64(seed ^ GOLDEN).wrapping_add(counter.wrapping_mul(GOLDEN)))
}

/// Uniform index in `0..bound` for the `counter`-th draw (Lemire's
/// multiply-shift; bias is at most `bound / 2^64`).
#[inline]
pub fn index(seed: u64, counter: u64, bound: usize) -> usize {
    debug_assert!(bound > 0);
    ((word(seed, counter) as u128 * bound as u128) >> 64) as usize
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn unit(seed: u64, counter: u64) -> f64 {
    (word(seed, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// In-place Fisher–Yates shuffle; draw `i` uses counter `i`.
pub fn shuffle<T>(items: &mut [T], seed: u64) {
    for i in (1..items.len()).rev() {
        let j = index(seed, i as u64, i + 1);
        items.swap(i, j);
    }
}

/// A ChaCha8 stream for samplers, keyed by a derived seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_depends_on_every_tag() {
        let a = derive_seed(7, &[1, 2]);
        assert_ne!(a, derive_seed(7, &[2, 1]));
        assert_ne!(a, derive_seed(8, &[1, 2]));
        assert_ne!(a, derive_seed(7, &[1]));
        assert_eq!(a, derive_seed(7, &[1, 2]));
    }

    #[test]
    fn index_is_roughly_uniform() {
        let mut counts = [0usize; 5];
        for c in 0..50_000 {
            counts[index(3, c, 5)] += 1;
        }
        for &k in &counts {
            assert!((k as f64 - 10_000.0).abs() < 400.0, "{counts:?}");
        }
    }

    #[test]
    fn shuffle_is_a_permutation_and_replayable() {
        let mut a: Vec<usize> = (0..100).collect();
        let mut b = a.clone();
        shuffle(&mut a, 11);
        shuffle(&mut b, 11);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(a, sorted);
    }

    #[test]
    fn unit_in_range() {
        for c in 0..1000 {
            let u = unit(5, c);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
