//! Seeded random source shared by map initialization, training and the
//! synthetic generator.
//!
//! The generator is ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`), keyed
//! through `SeedableRng::seed_from_u64` (PCG32 expansion of the 64-bit seed
//! into the 256-bit key). Each consumer reads its own ChaCha stream so that
//! changing one consumer never shifts the draws of another:
//!
//! | stream | consumer                         |
//! |--------|----------------------------------|
//! | 0      | SOM weight initialization        |
//! | 1      | SOM training sample selection    |
//! | 2      | synthetic basket generation      |
//!
//! Derived draws are defined here rather than borrowed from `rand` so the
//! sequence is fixed by this file alone:
//!
//! * `unit_f64`: `(next_u64 >> 11) * 2^-53`, uniform on `[0, 1)`.
//! * `bit`: the top bit of `next_u64`.
//! * `index(n)`: Lemire's multiply-shift with rejection on 64-bit words.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 0,
    Sampling = 1,
    Synth = 2,
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream as u64);
        SeededRng { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bit(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        let n = n as u64;
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
            }
        }
        (m >> 64) as usize
    }
}
