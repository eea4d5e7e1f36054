//! Counter-based random stream behind every stochastic operation.
//!
//! Wraps ChaCha8 keyed from a [`DerivedSeed`]. Distribution sampling is done
//! here with `libm` so results do not depend on the platform math library.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::seed::DerivedSeed;

pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: DerivedSeed) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed.0),
        }
    }

    /// Independent sub-stream of the same seed.
    pub fn stream(seed: DerivedSeed, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed.0);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Unbiased integer in [0, n). `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Standard normal via Box-Muller (one output per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(std::f64::consts::TAU * u2)
    }

    /// Poisson variate. Multiplication method below 10, PTRS above.
    pub fn poisson(&mut self, lambda: f64) -> u64 {
        if lambda.is_nan() || lambda <= 0.0 {
            return 0;
        }
        if lambda < 10.0 {
            let limit = libm::exp(-lambda);
            let mut k = 0u64;
            let mut p = self.uniform();
            while p > limit {
                k += 1;
                p *= self.uniform();
            }
            return k;
        }
        self.poisson_ptrs(lambda)
    }

    // Hormann's transformed rejection with squeeze.
    fn poisson_ptrs(&mut self, lambda: f64) -> u64 {
        let slam = libm::sqrt(lambda);
        let loglam = libm::log(lambda);
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let invalpha = 1.1239 + 1.1328 / (b - 3.4);
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform();
            let us = 0.5 - u.abs();
            let k = libm::floor((2.0 * a / us + b) * u + lambda + 0.43);
            if us >= 0.07 && v <= vr {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = libm::log(v) + libm::log(invalpha) - libm::log(a / (us * us) + b);
            let rhs = -lambda + k * loglam - libm::lgamma(k + 1.0);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }

    /// Fisher-Yates sample of `count` distinct values from `0..n`, sorted.
    pub fn sample_without_replacement(&mut self, n: u32, count: usize) -> Vec<u32> {
        let mut pool: Vec<u32> = (0..n).collect();
        let count = count.min(pool.len());
        for i in 0..count {
            let j = i + self.below((pool.len() - i) as u64) as usize;
            pool.swap(i, j);
        }
        let mut picked = pool[..count].to_vec();
        picked.sort_unstable();
        picked
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn reproducible_per_seed() {
        let mut a = SeededRng::new(DerivedSeed(42));
        let mut b = SeededRng::new(DerivedSeed(42));
        let xs: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
        let mut c = SeededRng::stream(DerivedSeed(42), 1);
        assert_ne!(c.next_u64(), xs[0]);
    }

    #[test]
    fn normal_moments() {
        let mut rng = SeededRng::new(DerivedSeed(1));
        let xs: Vec<f64> = (0..200_000).map(|_| rng.normal()).collect();
        let (m, v) = moments(&xs);
        assert!(m.abs() < 0.01, "mean {m}");
        assert!((v - 1.0).abs() < 0.02, "var {v}");
    }

    #[test]
    fn poisson_moments_both_regimes() {
        for &lambda in &[0.5f64, 3.0, 9.5, 12.0, 60.0, 400.0] {
            let mut rng = SeededRng::new(DerivedSeed(lambda.to_bits()));
            let xs: Vec<f64> = (0..100_000).map(|_| rng.poisson(lambda) as f64).collect();
            let (m, v) = moments(&xs);
            let se = (lambda / 100_000.0).sqrt();
            assert!((m - lambda).abs() < 6.0 * se, "lambda {lambda} mean {m}");
            assert!((v / lambda - 1.0).abs() < 0.05, "lambda {lambda} var {v}");
        }
    }

    #[test]
    fn below_is_in_range_and_covers() {
        let mut rng = SeededRng::new(DerivedSeed(9));
        let mut seen = [false; 7];
        for _ in 0..1000 {
            let v = rng.below(7) as usize;
            seen[v] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn sampling_without_replacement_is_distinct() {
        let mut rng = SeededRng::new(DerivedSeed(3));
        let s = rng.sample_without_replacement(32, 8);
        assert_eq!(s.len(), 8);
        let mut d = s.clone();
        d.dedup();
        assert_eq!(d.len(), 8);
        assert!(s.iter().all(|&b| b < 32));
    }
}
