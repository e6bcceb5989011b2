//! Deterministic pseudo-random number generation.
//!
//! All randomness in this crate flows through [`SplitMix64`] (Steele, Lea &
//! Flood 2014), a tiny splittable generator with a fixed, documented output
//! stream. Identical seeds give bit-identical streams on every platform and
//! under any thread count, which keeps generated inputs and random masks
//! reproducible.

/// SplitMix64 generator. The state advances by the golden-ratio increment and
/// each output is a finalized mix of the new state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Next 64 uniformly distributed bits.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from `[0, bound)` by rejection, bias-free.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    /// Uniform `f64` in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Derive an independent stream for subcomponent `index`.
    pub fn split(seed: u64, index: u64) -> Self {
        let mut root = Self::new(seed);
        let mut derived = root.next_u64();
        for _ in 0..index {
            derived = Self::new(derived).next_u64();
        }
        Self::new(derived)
    }
}
