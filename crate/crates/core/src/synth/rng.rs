//! Counter-based per-pixel random streams.
//!
//! Every pixel of every frame gets its own SplitMix64 stream keyed by
//! `(seed, frame_id, pixel)`, so draws do not depend on scheduling and the
//! output is identical on every platform.

use rand_core::{impls, RngCore};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct PixelRng {
    state: u64,
}

impl PixelRng {
    pub fn from_seed(seed: u64) -> Self {
        Self { state: finalize(seed) }
    }

    /// Independent stream for one pixel of one frame.
    pub fn for_pixel(seed: u64, frame_id: u32, pixel: u64) -> Self {
        let k = finalize(seed ^ 0x5EED_5EED_5EED_5EED);
        let k = finalize(k ^ (frame_id as u64).wrapping_add(1).wrapping_mul(GOLDEN));
        let k = finalize(k ^ pixel.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03));
        Self { state: k }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..n`.
    pub fn below(&mut self, n: u32) -> u32 {
        (((self.next_u64() >> 32) * n as u64) >> 32) as u32
    }
}

impl RngCore for PixelRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        finalize(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}
