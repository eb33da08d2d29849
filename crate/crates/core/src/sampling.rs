//! Deterministic low-discrepancy sequences.
//!
//! Points come from a Halton sequence with a Cranley–Patterson rotation drawn
//! from a ChaCha stream keyed by the seed, so the same `(dimension, seed)` pair
//! always yields the same sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Radical inverse of `index` in base `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut acc = 0.0;
    while index > 0 {
        acc += (index % b) as f64 * factor;
        index /= b;
        factor *= inv;
    }
    acc
}

#[derive(Debug, Clone)]
pub struct ShiftedHalton {
    shift: Vec<f64>,
    index: u64,
}

impl ShiftedHalton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sequence supports at most {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.gen::<f64>()).collect();
        // Skip the first few points; they cluster near the origin for large bases.
        Self { shift, index: 20 }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        self.shift
            .iter()
            .enumerate()
            .map(|(d, s)| {
                let u = radical_inverse(self.index, PRIMES[d]) + s;
                u - u.floor()
            })
            .collect()
    }
}

impl Iterator for ShiftedHalton {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        Some(self.next_point())
    }
}
