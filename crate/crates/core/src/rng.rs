//! Deterministic pseudorandom generator used everywhere randomness appears.
//!
//! The generator is splitmix64 (Steele, Lea and Flood, 2014). It was picked
//! because the whole algorithm fits in four lines, so any reimplementation in
//! another language reproduces the same partitions, patches and synthetic
//! images byte for byte. Bounded draws use the Lemire multiply-shift
//! reduction, shuffles are standard Fisher-Yates from the top, and Gaussian
//! draws use Box-Muller keeping only the cosine branch. None of these choices
//! may change without breaking replays of seeded experiments.

/// splitmix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derives an independent stream for `(seed, a, b)` without consuming
    /// this one. Used for per-subject / per-sample substreams.
    pub fn derive(seed: u64, a: u64, b: u64) -> Self {
        let mut mixer = SplitMix64::new(seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let s = mixer.next_u64() ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        SplitMix64::new(s)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). Lemire multiply-shift; slight bias below
    /// 2^-64 is irrelevant here and keeps the draw a single multiplication.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniform in [lo, hi).
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Fisher-Yates shuffle, iterating from the last element down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Standard normal via Box-Muller, cosine branch only.
    pub fn gauss(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
