//! Counter-based deterministic randomness.
//!
//! Every random quantity in the crate is a pure function of a seed and a
//! counter, hashed through a splitmix64-style finalizer. This gives:
//!
//! * replayable edge queries — the variate for a directed pair `(s, t)`
//!   never depends on query order or on other pairs;
//! * O(1) memory for graphs whose edge set would never fit in RAM;
//! * cheap independent substreams (positions, edges, initial set,
//!   tie-breaking) derived from user seeds via domain tags, so reusing the
//!   same numeric seed for two purposes still yields unrelated streams.

/// Domain-separation tags for deriving independent streams from one seed.
pub(crate) const TAG_POSITION: u64 = 0x706f_7369_7469_6f6e;
pub(crate) const TAG_EDGE: u64 = 0x6564_6765_6472_6177;
pub(crate) const TAG_INIT: u64 = 0x696e_6974_7365_7400;
pub(crate) const TAG_TIE: u64 = 0x7469_6562_7265_616b;
pub(crate) const TAG_FIRE_EDGE: u64 = 0x6669_7265_6564_6765;
pub(crate) const TAG_FIRE_TIE: u64 = 0x6669_7265_7469_6500;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const MIX_A: u64 = 0xbf58_476d_1ce4_e5b9;
const MIX_B: u64 = 0x94d0_49bb_1331_11eb;

/// The splitmix64 output finalizer: a full-avalanche bijection on u64.
#[inline]
pub fn avalanche(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_A);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_B);
    z ^ (z >> 31)
}

/// Derive a stream seed for a given purpose from a user seed.
#[inline]
pub fn stream_seed(seed: u64, tag: u64) -> u64 {
    avalanche(seed.wrapping_add(GOLDEN) ^ tag.wrapping_mul(MIX_A))
}

/// Hash a (seed, counter) pair.
#[inline]
pub fn mix2(seed: u64, a: u64) -> u64 {
    avalanche(avalanche(seed.wrapping_add(GOLDEN)) ^ a.wrapping_mul(GOLDEN).wrapping_add(1))
}

/// Hash a (seed, counter, counter) triple. Asymmetric in `a` and `b`, so
/// `mix3(s, a, b)` and `mix3(s, b, a)` are unrelated.
#[inline]
pub fn mix3(seed: u64, a: u64, b: u64) -> u64 {
    let h = avalanche(seed.wrapping_add(GOLDEN) ^ a.wrapping_mul(GOLDEN).wrapping_add(1));
    avalanche(h ^ b.wrapping_mul(MIX_B).wrapping_add(2))
}

/// Map a hash to a double in `[0, 1)` using the top 53 bits.
#[inline]
pub fn unit_f64(h: u64) -> f64 {
    const SCALE: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53
    ((h >> 11) as f64) * SCALE
}

/// A small sequential PRNG (splitmix64) for the few places that need a
/// stream rather than a counter hash: tie-break sampling, shuffles,
/// Monte Carlo validators.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        avalanche(self.state)
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    /// Uniform integer in `[0, n)`, unbiased via rejection.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n; // 2^64 mod n
        loop {
            let v = self.next_u64();
            if v >= threshold {
                return v % n;
            }
        }
    }

    /// Standard normal via Box-Muller (one value per call, second discarded).
    pub fn next_gaussian(&mut self) -> f64 {
        loop {
            let u1 = self.next_f64();
            if u1 <= f64::MIN_POSITIVE {
                continue;
            }
            let u2 = self.next_f64();
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
