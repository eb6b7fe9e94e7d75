//! Counter-based random streams with O(1) access to any time index.
//!
//! A stream is keyed by `(seed, stream, |i|, sign(i))`: the seed keys a
//! ChaCha8 generator, the realization id and the sign of the index select the
//! ChaCha stream, and the magnitude of the index selects a 16-word block. The
//! value at an index is therefore a pure function of the key, independent of
//! evaluation order and thread schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Words reserved for each index. A standard normal draw by the ziggurat
/// method needs more than eight `u64`s with negligible probability.
const WORDS_PER_INDEX: u128 = 16;

/// Random words indexed by an integer time `i ∈ ℤ`.
///
/// Indices `i ≥ 1` are the future (`i = 1` drives the step from time 0 to
/// time 1); indices `i ≤ 0` are the past, `i = 0` driving the step from time
/// −1 to time 0. Positive and non-positive indices draw from independent
/// ChaCha streams.
#[derive(Clone)]
pub struct CounterStream {
    base: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl std::fmt::Debug for CounterStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CounterStream")
            .field("seed", &self.seed)
            .field("stream", &self.stream)
            .finish()
    }
}

impl PartialEq for CounterStream {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.stream == other.stream
    }
}

impl CounterStream {
    /// `stream` must be below 2^63.
    pub fn new(seed: u64, stream: u64) -> Self {
        debug_assert!(stream < 1 << 63);
        CounterStream {
            base: ChaCha8Rng::seed_from_u64(seed),
            seed,
            stream,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    fn at(&self, i: i64) -> ChaCha8Rng {
        let (past, magnitude) = if i >= 1 {
            (0, (i - 1) as u64)
        } else {
            (1, i.unsigned_abs())
        };
        let mut rng = self.base.clone();
        rng.set_stream((self.stream << 1) | past);
        rng.set_word_pos(WORDS_PER_INDEX * magnitude as u128);
        rng
    }

    pub fn word(&self, i: i64) -> u64 {
        self.at(i).random()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&self, i: i64) -> f64 {
        (self.word(i) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&self, i: i64) -> f64 {
        self.at(i).sample(StandardNormal)
    }
}
