//! Deterministic pseudo-randomness for the whole lab.
//!
//! Every experiment replays bit-exactly from its seeds: the generator is
//! SplitMix64 (one word of state, published test vectors), stream labels are
//! mixed into the seed before first use so the shuffle and dropout streams
//! derived from the same epoch seed cannot alias, and bounded integers use
//! multiply-high reduction so the shuffle is fixed across platforms.

/// Stream label for data-order shuffling.
pub const SHUFFLE_STREAM: u64 = 1;
/// Stream label for dropout masks.
pub const DROPOUT_STREAM: u64 = 2;
/// Stream label for synthetic data generation.
pub const SYNTH_STREAM: u64 = 3;
/// Stream label for train/val/test splitting.
pub const SPLIT_STREAM: u64 = 4;
/// Stream label for the ratio-controlled order builder.
pub const ORDER_BUILD_STREAM: u64 = 5;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; a bijection on u64.
#[inline]
fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// A SplitMix64 generator. One word of state, a value type: never shared,
/// each run/epoch/stream owns its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prng {
    state: u64,
}

impl Prng {
    /// Derives a generator from a seed and a stream label. `mix64` is a
    /// bijection with `mix64(0) == 0`, so `(seed, 0)` starts the reference
    /// SplitMix64 sequence for `seed`, and distinct labels give distinct
    /// non-colliding states.
    pub fn from_parts(seed: u64, stream: u64) -> Self {
        Self {
            state: seed ^ mix64(stream),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1): top 53 bits scaled by 2^-53.
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the polar Box-Muller method.
    pub fn next_gaussian(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.next_uniform() - 1.0;
            let v = 2.0 * self.next_uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }

    /// Integer in [0, n) by 64-bit multiply-high reduction.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Fisher-Yates shuffle, i from n-1 down to 1, j in [0, i].
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix64_reference_vector() {
        // First outputs of the published SplitMix64 sequence for seed 0.
        let mut rng = Prng::from_parts(0, 0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn same_parts_same_stream() {
        let a = Prng::from_parts(42, 7).next_u64();
        let b = Prng::from_parts(42, 7).next_u64();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_distinct_outputs() {
        let a = Prng::from_parts(0, 0).next_u64();
        let b = Prng::from_parts(0, 1).next_u64();
        assert_ne!(a, b);
    }

    #[test]
    fn uniform_in_range_and_mean() {
        let mut rng = Prng::from_parts(123, 0);
        let mut sum = 0.0;
        let n = 1_000_000;
        for _ in 0..n {
            let u = rng.next_uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = Prng::from_parts(7, 0);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn gaussian_deterministic() {
        let a = Prng::from_parts(9, 2).next_gaussian();
        let b = Prng::from_parts(9, 2).next_gaussian();
        assert_eq!(a, b);
    }

    #[test]
    fn shuffle_edge_cases() {
        let mut rng = Prng::from_parts(1, SHUFFLE_STREAM);
        let mut empty: Vec<u32> = vec![];
        rng.shuffle(&mut empty);
        assert!(empty.is_empty());
        let mut single = vec![7u32];
        rng.shuffle(&mut single);
        assert_eq!(single, vec![7]);
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut rng = Prng::from_parts(5, SHUFFLE_STREAM);
        let mut v: Vec<usize> = (0..10).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn shuffle_uniformity_smoke() {
        // Over 1e5 shuffles of [0,1,2] each of the 6 permutations shows up
        // with frequency 1/6 +- 0.01.
        let mut rng = Prng::from_parts(99, SHUFFLE_STREAM);
        let mut counts = std::collections::HashMap::new();
        let trials = 100_000;
        for _ in 0..trials {
            let mut v = [0u8, 1, 2];
            rng.shuffle(&mut v);
            *counts.entry(v).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (&perm, &c) in &counts {
            let freq = c as f64 / trials as f64;
            assert!(
                (freq - 1.0 / 6.0).abs() < 0.01,
                "perm {perm:?} freq {freq}"
            );
        }
    }
}
