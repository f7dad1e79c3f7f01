//! Scrambled Halton low-discrepancy sequences.
//!
//! Used for the BO initial design and for hyperparameter multi-start
//! grids. Scrambling applies a random digit permutation per base (with 0
//! kept fixed so trailing zero digits stay zero) plus a random modulo-1
//! shift per dimension; the shift keeps even the base-2 dimension
//! seed-dependent. Deterministic given the generator passed to
//! [`ScrambledHalton::new`].

use rand::seq::SliceRandom;
use rand::Rng;

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

pub struct ScrambledHalton {
    /// One digit permutation per dimension; `perms[i][d]` maps digit `d` in
    /// base `PRIMES[i]`.
    perms: Vec<Vec<u64>>,
    /// Per-dimension rotation, applied modulo 1.
    shifts: Vec<f64>,
    index: u64,
}

impl ScrambledHalton {
    /// A `dim`-dimensional sequence scrambled by draws from `rng`.
    ///
    /// Panics if `dim` exceeds the number of tabulated prime bases.
    pub fn new(dim: usize, rng: &mut impl Rng) -> Self {
        assert!(
            dim <= PRIMES.len(),
            "scrambled Halton supports up to {} dimensions",
            PRIMES.len()
        );
        let perms = PRIMES[..dim]
            .iter()
            .map(|&p| {
                let mut digits: Vec<u64> = (1..p).collect();
                digits.shuffle(rng);
                let mut perm = Vec::with_capacity(p as usize);
                perm.push(0);
                perm.extend(digits);
                perm
            })
            .collect();
        let shifts = (0..dim).map(|_| rng.gen::<f64>()).collect();
        // Index 0 maps to the all-zero corner; skip it.
        ScrambledHalton {
            perms,
            shifts,
            index: 1,
        }
    }

    /// Next point in the unit cube `[0, 1)^dim`.
    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        self.perms
            .iter()
            .zip(&self.shifts)
            .enumerate()
            .map(|(d, (perm, shift))| {
                let u = radical_inverse(i, PRIMES[d], perm) + shift;
                u - u.floor()
            })
            .collect()
    }

    /// Next point mapped affinely into `bounds`.
    pub fn next_in(&mut self, bounds: &[(f64, f64)]) -> Vec<f64> {
        self.next_point()
            .iter()
            .zip(bounds)
            .map(|(u, &(lo, hi))| lo + u * (hi - lo))
            .collect()
    }
}

fn radical_inverse(mut i: u64, base: u64, perm: &[u64]) -> f64 {
    let mut inv = 0.0;
    let mut scale = 1.0 / base as f64;
    while i > 0 {
        inv += perm[(i % base) as usize] as f64 * scale;
        i /= base;
        scale /= base as f64;
    }
    inv
}
