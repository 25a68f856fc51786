//! Deterministic sampling.
//!
//! Every random quantity is drawn from a SplitMix64 stream. The stream for
//! sample `i` of a run with seed `s` is seeded with
//! `splitmix64_mix(s ^ splitmix64_mix(i + 1))`, so records do not depend on
//! the order in which samples are processed. Uniforms in `[0, 1)` take the top
//! 53 bits of each output; standard normals use the Box–Muller transform on
//! two consecutive uniforms (cosine branch only, so each normal consumes
//! exactly two outputs).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

/// The SplitMix64 output finalizer.
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct Sampler {
    inner: SplitMix64,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { inner: SplitMix64::seed_from_u64(seed) }
    }

    /// Independent stream for one sample of a seeded run.
    pub fn for_sample(seed: u64, sample: u64) -> Self {
        Self::new(splitmix64_mix(seed ^ splitmix64_mix(sample.wrapping_add(1))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn complex_normal(&mut self) -> C64 {
        let re = self.normal();
        C64::new(re, self.normal())
    }

    pub fn normal_vec(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.normal())
    }

    pub fn complex_vec(&mut self, n: usize) -> DVector<C64> {
        DVector::from_fn(n, |_, _| self.complex_normal())
    }

    pub fn complex_mat(&mut self, r: usize, c: usize) -> DMatrix<C64> {
        DMatrix::from_fn(r, c, |_, _| self.complex_normal())
    }

    /// Uniformly distributed unit vector in R^n.
    pub fn unit_vec(&mut self, n: usize) -> DVector<f64> {
        loop {
            let v = self.normal_vec(n);
            let nv = v.norm();
            if nv > 1e-12 {
                return v / nv;
            }
        }
    }

    pub fn index(&mut self, n: usize) -> usize {
        (self.uniform() * n as f64) as usize % n.max(1)
    }
}
