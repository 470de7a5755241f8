//! Sobol' low-discrepancy sequence.
//!
//! Direction numbers are the first 20 non-trivial dimensions of the
//! Joe–Kuo `new-joe-kuo-6.21201` set; dimension 0 is the base-2 van der
//! Corput sequence. Points are produced in Gray-code order, so the first
//! `2^m` points form the same set as in natural order.
//!
//! Scrambling is a random digital shift: every coordinate is XORed with a
//! fixed 32-bit mask drawn from a ChaCha8 stream seeded by the user seed.
//! Digital shifts preserve the net structure of the sequence.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const BITS: usize = 32;

/// `(degree s, polynomial a, initial m_1..m_s)` for dimensions 1..=20.
const JOE_KUO: [(u32, u32, &[u32]); 20] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
];

/// Highest supported dimension count.
pub const MAX_DIMS: usize = JOE_KUO.len() + 1;

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = 1 << (BITS - 1 - i);
        }
        return v;
    }
    let (s, a, init) = JOE_KUO[dim - 1];
    let s = s as usize;
    let mut m: Vec<u64> = init.iter().map(|&x| x as u64).collect();
    for i in s..BITS {
        let mut next = m[i - s] ^ (m[i - s] << s);
        for k in 1..s {
            if (a >> (s - 1 - k)) & 1 == 1 {
                next ^= m[i - k] << k;
            }
        }
        m.push(next);
    }
    for (i, vi) in v.iter_mut().enumerate() {
        *vi = (m[i] << (BITS - 1 - i)) as u32;
    }
    v
}

#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    shift: Vec<u32>,
    state: Vec<u32>,
    index: u64,
}

impl Sobol {
    /// Unscrambled sequence starting at the origin.
    pub fn new(dims: usize) -> Result<Self> {
        if dims == 0 || dims > MAX_DIMS {
            return Err(Error::InvalidArgument(format!("Sobol' dimension {dims} outside 1..={MAX_DIMS}")));
        }
        Ok(Self {
            directions: (0..dims).map(direction_numbers).collect(),
            shift: vec![0; dims],
            state: vec![0; dims],
            index: 0,
        })
    }

    /// Digitally shifted sequence; the same seed always gives the same points.
    pub fn scrambled(dims: usize, seed: u64) -> Result<Self> {
        let mut seq = Self::new(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in seq.shift.iter_mut() {
            *s = rng.next_u32();
        }
        Ok(seq)
    }

    pub fn dims(&self) -> usize {
        self.directions.len()
    }

    /// Next point as raw 32-bit integers.
    pub fn next_raw(&mut self) -> Vec<u32> {
        if self.index > 0 {
            // Gray code: flip the direction number of the lowest zero bit of index - 1.
            let bit = (self.index - 1).trailing_ones() as usize;
            assert!(bit < BITS, "Sobol' sequence exhausted");
            for (s, dir) in self.state.iter_mut().zip(&self.directions) {
                *s ^= dir[bit];
            }
        }
        self.index += 1;
        self.state.iter().zip(&self.shift).map(|(s, m)| s ^ m).collect()
    }

    /// Next point in `[0, 1)^dims`.
    pub fn next_point(&mut self) -> Vec<f64> {
        const SCALE: f64 = 1.0 / (1u64 << BITS) as f64;
        self.next_raw().into_iter().map(|v| v as f64 * SCALE).collect()
    }
}

impl Iterator for Sobol {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        Some(self.next_point())
    }
}
