//! Deterministic, counter-based random streams.
//!
//! A [`RngStream`] is an immutable descriptor `(seed, stream_id)`. Every
//! consumer derives the generator it needs locally, so Monte Carlo results do
//! not depend on scheduling or worker count: trial `i` of experiment point `p`
//! always draws from the stream derived by the same `(seed, tags...)` chain.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{BicmError, Result};
use crate::numerics::Cx;

/// Stateless 64-bit finalizer (SplitMix64 tail).
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Immutable descriptor of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derives a child stream; `(seed, id, tag)` chains are collision-mixed so
    /// hierarchies like (experiment point, trial index) stay independent.
    pub fn substream(&self, tag: u64) -> Self {
        let child = mix64(
            mix64(self.stream_id ^ GOLDEN)
                .wrapping_add(mix64(tag.wrapping_mul(GOLDEN) ^ 0xD1B5_4A32_D192_ED03)),
        );
        Self {
            seed: self.seed,
            stream_id: child,
        }
    }

    /// Fresh generator for this stream. Calling twice yields identical
    /// sequences.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut key = [0u8; 32];
        let mut state = self.seed ^ 0x6A09_E667_F3BC_C908;
        for (w, chunk) in key.chunks_exact_mut(8).enumerate() {
            state = mix64(
                state
                    .wrapping_add(GOLDEN)
                    .wrapping_add(mix64(self.stream_id ^ (w as u64).wrapping_mul(GOLDEN))),
            );
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}

/// Draws `count` i.i.d. circularly-symmetric complex Gaussians with total
/// per-sample variance `variance` (each part is `N(0, variance/2)`).
pub fn gaussian_complex(stream: &RngStream, count: usize, variance: f64) -> Result<Vec<Cx>> {
    if !variance.is_finite() || variance < 0.0 {
        return Err(BicmError::InvalidInput(format!(
            "variance must be finite and nonnegative, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(vec![Cx::new(0.0, 0.0); count]);
    }
    let mut rng = stream.rng();
    let scale = (variance / 2.0).sqrt();
    let normal = StandardNormal;
    Ok((0..count)
        .map(|_| {
            let re: f64 = normal.sample(&mut rng);
            let im: f64 = normal.sample(&mut rng);
            Cx::new(re * scale, im * scale)
        })
        .collect())
}
