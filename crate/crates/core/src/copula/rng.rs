use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counter-addressed random stream.
///
/// The value at position `counter` depends only on `(seed, stream_id,
/// counter)`, so any range of positions can be generated independently of the
/// others. Each position yields one 64-bit word (one uniform).
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self::at(seed, stream_id, 0)
    }

    pub fn at(seed: u64, stream_id: u64, counter: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        rng.set_word_pos(u128::from(counter) * 2);
        Self {
            seed,
            stream_id,
            counter,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Position of the next value.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// A copy of this stream positioned `offset` values ahead.
    pub fn ahead(&self, offset: u64) -> Self {
        Self::at(self.seed, self.stream_id, self.counter + offset)
    }

    /// Moves forward by `count` values without generating them.
    pub fn skip(&mut self, count: u64) {
        *self = self.ahead(count);
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.rng.next_u64()
    }

    /// Uniform on the open interval `(0, 1)`, with 52 random bits; the
    /// extremes are `2^-53` and `1 - 2^-53`.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 52) as f64;
        ((self.next_u64() >> 12) as f64 + 0.5) * SCALE
    }
}

/// Seed for the `k`-th derived run; `k = 0` returns `seed` itself.
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
