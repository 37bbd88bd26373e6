//! Counter-keyed SplitMix64 streams.
//!
//! A stream is fully determined by `(seed, instance_index, annotator_index)`:
//! the generator state starts at `seed ^ finalize(instance_index << 32 + annotator_index)`.
//! Uniforms take the top 53 bits of each output and lie in `[0, 1)`.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
pub fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        SplitMix64 { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        finalize(self.state)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)` via the 53-bit uniform.
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        let i = (self.next_f64() * bound as f64) as usize;
        i.min(bound - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngKey {
    pub seed: u64,
    pub instance_index: u64,
    pub annotator_index: u64,
}

impl RngKey {
    pub fn new(seed: u64, instance_index: u64, annotator_index: u64) -> Self {
        RngKey {
            seed,
            instance_index,
            annotator_index,
        }
    }

    pub fn stream(&self) -> SplitMix64 {
        let counter = self
            .instance_index
            .wrapping_shl(32)
            .wrapping_add(self.annotator_index);
        SplitMix64::new(self.seed ^ finalize(counter))
    }

    /// The single uniform variate used for one categorical draw.
    pub fn uniform(&self) -> f64 {
        self.stream().next_f64()
    }
}
