//! Deterministic sampling: Halton low-discrepancy points for residual
//! sweeps and a SplitMix64 stream for randomized data.
//!
//! SplitMix64 is the Steele-Lea-Flood mixer: state advances by
//! 0x9E3779B97F4A7C15 and the output is finalized with the two xor-shift
//! multiplications (0xBF58476D1CE4E5B9, 0x94D049BB133111EB). Identical
//! seeds reproduce identical streams on every platform.

use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

const PRIMES: [u32; 11] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31];

fn halton(mut index: u64, base: u32) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base as u64) as f64;
        index /= base as u64;
    }
    r
}

/// `n` Halton points in the box `[lo, hi]^dim`; the seed offsets the start
/// index of the sequence so different seeds give different but reproducible
/// sweeps.
pub fn sample_points(dim: usize, n: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "sampling supports dim <= 11");
    let offset = 17 + (seed % 10_007) * 13;
    (0..n as u64)
        .map(|k| {
            (0..dim)
                .map(|j| lo + (hi - lo) * halton(offset + k, PRIMES[j]))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // reference stream for seed 1234567 (computed from the published
        // SplitMix64 constants)
        let mut g = SplitMix64::new(0);
        let a = g.next_u64();
        assert_eq!(a, 0xE220A8397B1DCDAF);
    }

    #[test]
    fn points_are_deterministic_and_in_box() {
        let p1 = sample_points(3, 10, -2.0, 2.0, 42);
        let p2 = sample_points(3, 10, -2.0, 2.0, 42);
        assert_eq!(p1, p2);
        for p in &p1 {
            for &x in p {
                assert!((-2.0..=2.0).contains(&x));
            }
        }
        let p3 = sample_points(3, 10, -2.0, 2.0, 43);
        assert_ne!(p1, p3);
    }
}
