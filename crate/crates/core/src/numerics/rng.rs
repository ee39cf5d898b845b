use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::Scalar;

/// Seeded random source for one logical task.
///
/// Backed by ChaCha20 (`rand_chacha` pinned to 0.9.0) keyed by `seed`, with
/// `stream_id` selecting the ChaCha stream. ChaCha output is specified
/// bit-for-bit, so a `(seed, stream_id)` pair yields the same draws on every
/// platform. Gaussian draws use the `rand_distr` 0.5.1 ziggurat sampler.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Fresh stream on the same seed whose id is a hash of this stream's id
    /// and `tag`. Distinct tags give distinct streams.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream::new(
            self.seed,
            mix(self.stream_id ^ mix(tag.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        )
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw on `(0, 1]`; safe to take the logarithm of.
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random::<u64>()
    }

    pub fn gaussian<T: Scalar>(&mut self, std: T) -> T {
        T::lit(self.normal()) * std
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
